#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torwalk/point.hpp"

namespace torwalk {

enum class RegionKind {
    Disc,              // |y - x| < n, strict
    Annulus,           // n <= |y - x| < n + s
    DiscComplement,    // |y - x| >= n
    ToralDisc,         // toral distance < n
    ToralAnnulus,      // n <= toral distance < n + s
    ToralDiscComplement,
};

/// Discs, annuli and their complements on Z^2 or Z^2_K. Membership is decided
/// on squared radii so that irrational radii (D(0,sqrt 2)) classify exactly.
class Region {
  public:
    static Region disc(LatticePoint center, double radius);
    static Region disc_rsq(LatticePoint center, double radius_sq);
    static Region annulus(LatticePoint center, double radius, double width);
    static Region annulus_rsq(LatticePoint center, double inner_sq, double outer_sq);
    static Region disc_complement(LatticePoint center, double radius);
    /// Toral variants require n + s < K/4 and are rejected otherwise.
    static Region toral_disc(LatticePoint center, double radius, std::int64_t K);
    static Region toral_annulus(LatticePoint center, double radius, double width,
                                std::int64_t K);
    static Region toral_disc_complement(LatticePoint center, double radius,
                                        std::int64_t K);

    RegionKind kind() const { return kind_; }
    LatticePoint center() const { return center_; }
    double radius() const;
    double width() const;
    double inner_sq() const { return inner_sq_; }
    double outer_sq() const { return outer_sq_; }
    std::int64_t K() const { return K_; }
    bool toral() const;

    bool contains(LatticePoint p) const;
    bool contains(const TorusPoint& p) const;

    /// Exact member enumeration. Planar enumeration is only defined for
    /// bounded kinds (disc, annulus); complements are rejected.
    std::vector<LatticePoint> members() const;

    /// Config form kind:cx,cy:radius[:width][:K=<K>], e.g. "disc:0,0:16" or
    /// "annulus:0,0:16:4:K=128".
    static Region parse(const std::string& text);
    std::string to_string() const;

  private:
    Region() = default;
    RegionKind kind_ = RegionKind::Disc;
    LatticePoint center_;
    double inner_sq_ = 0.0;   // n^2
    double outer_sq_ = 0.0;   // (n+s)^2, annulus only
    std::int64_t K_ = 0;
};

struct JumpFlags {
    bool baby = false;      // |X| < s
    bool small = false;     // |X| < 2n
    bool medium = false;    // s <= |X| < K - 2n
    bool large = false;     // |X| >= K - 2n
    bool targeted = false;  // large and j(K-2n) <= |X| <= j(K+2n)/sqrt(2), some j >= 1
};

/// Jump taxonomy relative to a disc of radius n with an s-annulus on Z^2_K.
/// Boundary magnitudes |X| = s and |X| = K - 2n go to the larger class.
JumpFlags classify_jump(LatticePoint offset, double n, double s, std::int64_t K);

/// The level-radius scaffold r_{n,k} = e^n n^{3k}, bands s_k = n^4, the wide
/// n->n-1 downcrossing band sqrt(r_{n,n-1}), torus side K_n = n^gamma_bar r_{n,n},
/// and target excursion counts v_k = 3 a k^2 log k.
struct LevelStructure {
    int n = 0;
    double a = 0.0;
    double rho = 0.0;
    double gamma_bar = 0.0;
    std::vector<double> radii;     // r_{n,k}, k = 0..n
    std::vector<double> widths;    // s_k, k = 0..n
    double wide_down_width = 0.0;  // s_{n-1}^{n down}
    double K_n = 0.0;              // rounded to the nearest integer, kept real (overflows ints)
    std::vector<double> v;         // v_k, k = 0..n (v_k = 0 for k < 2)

    double r_prime(int k) const { return radii[k] + widths[k]; }

    /// Smallest n for which s_k < r_{n,k}^(1/2) holds for every k >= 0.
    static int delta_half_threshold();

    /// Desk-scale structure with explicit radii/widths for exercising the
    /// census machinery; validated only for ordering and band fit.
    static LevelStructure custom(std::vector<double> radii, std::vector<double> widths,
                                 double wide_down_width, double K, double a, double rho,
                                 std::vector<double> v);
};

/// Constraints n > 13, 0 < a < 2, rho < (2-a)/2, gamma_bar >= 10; violations
/// are rejected naming the inequality.
LevelStructure build_levels(int n, double a, double rho, double gamma_bar);

}  // namespace torwalk
