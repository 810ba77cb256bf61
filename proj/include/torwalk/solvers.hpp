#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "torwalk/geometry.hpp"
#include "torwalk/point.hpp"
#include "torwalk/step_distribution.hpp"

namespace torwalk {

struct SolveReport {
    std::size_t unknowns = 0;
    std::string method;          // "ldlt" or "cg"
    double max_residual = 0.0;   // max over solves of ||(I-Q)x - b||_inf
    double truncation_tail = 0.0;
};

/// JSON record with instance geometry, method, residual, truncation mass.
std::string solver_report_json(const SolveReport& report, const std::string& instance);

/// A finite set of lattice points (window representatives when toral) with
/// O(1) point -> index lookup over its bounding box.
class LatticeDomain {
  public:
    LatticeDomain() = default;
    /// Planar: points of the bounding disc around `center` of radius `reach`
    /// satisfying `keep`. Toral: the whole window filtered by `keep`.
    static LatticeDomain planar(LatticePoint center, double reach,
                                const std::function<bool(LatticePoint)>& keep);
    static LatticeDomain toral(std::int64_t K,
                               const std::function<bool(LatticePoint)>& keep);

    std::ptrdiff_t index_of(LatticePoint p) const;  // -1 when absent
    const std::vector<LatticePoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool toral_domain() const { return K_ > 0; }
    std::int64_t K() const { return K_; }

  private:
    std::vector<LatticePoint> points_;
    std::vector<std::int32_t> grid_;  // bounding-box index map, -1 = absent
    std::int64_t min_x_ = 0, min_y_ = 0, width_ = 0, height_ = 0;
    std::int64_t K_ = 0;

    void build_grid();
};

/// (I - Q) on a finite domain, Q the walk restricted to it; everything outside
/// is absorbing. Direct LDLT up to direct_cap unknowns, conjugate gradient
/// with residual < 1e-11 above.
class AbsorbingSystem {
  public:
    AbsorbingSystem(LatticeDomain domain, const StepDistribution& dist,
                    std::size_t direct_cap = 20000);
    ~AbsorbingSystem();
    AbsorbingSystem(AbsorbingSystem&&) noexcept;

    std::vector<double> solve(const std::vector<double>& rhs) const;
    std::vector<double> ones_rhs() const;
    std::vector<double> unit_rhs(LatticePoint p) const;
    /// One-step absorption mass into {targets}: rhs_i = sum_d p(d) [x_i + d
    /// absorbed and satisfies `target`]. Toral steps are projected first.
    std::vector<double> absorption_rhs(
        const std::function<bool(LatticePoint)>& target) const;

    const LatticeDomain& domain() const { return domain_; }
    const SolveReport& report() const { return report_; }

  private:
    struct Impl;
    LatticeDomain domain_;
    const StepDistribution* dist_;
    std::unique_ptr<Impl> impl_;
    mutable SolveReport report_;
};

/// Truncated Green's function of a bounded planar or toral region. Values are
/// 0 whenever either argument lies outside the domain; columns are solved
/// lazily and cached.
class GreenTable {
  public:
    GreenTable(const Region& domain, const StepDistribution& dist,
               std::size_t cap = 20000);

    double value(LatticePoint x, LatticePoint y) const;
    const std::vector<double>& column(LatticePoint y) const;  // G(., y)
    std::vector<double> escape_times() const;                 // row sums, by index
    double escape_time(LatticePoint x) const;

    const LatticeDomain& domain() const { return sys_.domain(); }
    const SolveReport& report() const { return sys_.report(); }

  private:
    AbsorbingSystem sys_;
    mutable std::unordered_map<std::size_t, std::vector<double>> columns_;
};

/// E^x(T_{A^c}) for every start in the domain (0 outside).
std::vector<double> expected_escape_time(const GreenTable& green);

struct EntryTimeTable {
    LatticeDomain domain;  // complement of the target on the torus
    std::vector<double> times;
    SolveReport report;
    double at(LatticePoint window_rep) const;
};
EntryTimeTable expected_toral_entry_time(std::int64_t K, const Region& target,
                                         const StepDistribution& dist);

enum class HitMethod { Absorbing, LastExit };

struct HitTable {
    LatticePoint start;
    std::vector<LatticePoint> targets;
    std::vector<double> prob;
    double total_mass = 0.0;
    double escape_mass = 0.0;  // truncation loss on planar problems
    SolveReport report;
    double at(LatticePoint y) const;
};

/// H_A(x, .) with A a disc (planar problems are truncated to `superdomain`
/// with the escape mass reported; toral problems are exact).
HitTable hitting_distribution(const Region& A, LatticePoint x, const Region& superdomain,
                              const StepDistribution& dist,
                              HitMethod method = HitMethod::Absorbing);

/// P^x(T_0 < T_{D(0,n)^c}), exact absorbing solve; toral when K is given.
double hit_point_before_exit(double n, LatticePoint x, const StepDistribution& dist,
                             std::optional<std::int64_t> K = std::nullopt);

struct RuinProbabilities {
    double p_out = 0.0;  // escape D(0,R) before hitting D(0,r)
    double p_in = 0.0;   // hit D(0,r) before escaping D(0,R)
};
RuinProbabilities gamblers_ruin(double r, double R, LatticePoint x,
                                const StepDistribution& dist,
                                std::optional<std::int64_t> K = std::nullopt);

/// psi/sigma/rho/phi for a partition A | B | C of the torus, plus the
/// Green's-function and hitting-time sandwich bounds checked pointwise.
struct ThreeSetResult {
    std::vector<LatticePoint> A, B;
    std::vector<double> psi, rho;    // indexed like A
    std::vector<double> sigma, phi;  // indexed like B
    double psi_sup = 0.0, sigma_sup = 0.0;
    double f_A = 0.0, f_B = 0.0;  // sup_a E^a(T_{B u C}), sup_b E^b(T_{A u C})
    // worst signed violations (<= 0 means the inequality held everywhere)
    double green_sandwich_violation = 0.0;
    double time_sandwich_violation = 0.0;
    double order_violation = 0.0;  // psi_a >= rho_a, sigma_b >= phi_b
    bool checks_pass(double tol) const {
        return green_sandwich_violation <= tol && time_sandwich_violation <= tol &&
               order_violation <= tol;
    }
};
ThreeSetResult three_set(std::int64_t K, const std::vector<LatticePoint>& A,
                         const std::vector<LatticePoint>& B,
                         const std::vector<LatticePoint>& C,
                         const StepDistribution& dist);
/// Disc / annulus / rest partition convenience.
ThreeSetResult three_set_disc_annulus(std::int64_t K, double n, double s,
                                      const StepDistribution& dist);

enum class HarnackSetting { Interior, InteriorToral, Exterior };

struct HarnackResult {
    double max_deviation = 0.0;  // max over target points of max |H(x,y)/H(x',y) - 1|
    std::size_t starts_used = 0;
    std::size_t targets_used = 0;
    std::size_t targets_excluded = 0;  // zero-probability targets
    SolveReport report;
};

/// Interior: exit distribution of D(0,4mr) compared across starts in D(0,2r),
/// targets in the s-band at the exit radius. Exterior: entry distribution of
/// D(0,r+s) from the sqrt(R)-shell at R = 4mr, conditioned on entering before
/// escaping D(0,4mR); exact finite solve.
HarnackResult harnack_ratio(HarnackSetting setting, double r, double m, double s,
                            std::optional<std::int64_t> K, const StepDistribution& dist,
                            std::size_t max_starts = 12);

struct BandEscapeResult {
    double sup_probability = 0.0;  // over starts in D(0, n/2)
    LatticePoint argmax;
    SolveReport report;
};
/// sup_x P^x(T_{bd D(0,n)_s} > T_{D(0,n+s)^c}): skipping the band on exit.
BandEscapeResult band_escape_probability(double n, double s,
                                         std::optional<std::int64_t> K,
                                         const StepDistribution& dist);

/// E^y(T) and E^y(T^2) of the hitting time of `target` on the torus, by
/// linear solves; used for the Kac moment bound check.
struct HittingMoments {
    LatticeDomain domain;
    std::vector<double> mean;
    std::vector<double> second;
    double sup_mean = 0.0;  // ||T||
};
HittingMoments toral_hitting_moments(std::int64_t K, const Region& target,
                                     const StepDistribution& dist);

}  // namespace torwalk
