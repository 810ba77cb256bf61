#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace torwalk {

/// A point of Z^2. Coordinates are 64-bit so that long jumping-walk
/// trajectories cannot wrap; squared norms go through __int128.
struct LatticePoint {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend LatticePoint operator+(LatticePoint a, LatticePoint b) {
        return {a.x + b.x, a.y + b.y};
    }
    friend LatticePoint operator-(LatticePoint a, LatticePoint b) {
        return {a.x - b.x, a.y - b.y};
    }
    LatticePoint operator-() const { return {-x, -y}; }
    friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

inline __int128 norm_sq(LatticePoint p) {
    return static_cast<__int128>(p.x) * p.x + static_cast<__int128>(p.y) * p.y;
}

inline double norm(LatticePoint p) {
    return std::sqrt(static_cast<double>(static_cast<long double>(norm_sq(p))));
}

/// Exact comparison of an integer squared distance against a real squared
/// radius. long double carries a 64-bit mantissa, so the integer side is
/// exact for every |coordinate| the engine produces near a boundary.
inline bool lt_sq(__int128 dist_sq, double radius_sq) {
    return static_cast<long double>(dist_sq) < static_cast<long double>(radius_sq);
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

/// pi_K: componentwise ((x + floor(K/2)) mod K) - floor(K/2), mod into [0,K).
/// The image window is [-floor(K/2), K-1-floor(K/2)]^2.
inline LatticePoint project_point(LatticePoint p, std::int64_t K) {
    if (K < 1) throw std::invalid_argument("project: K must be >= 1");
    const std::int64_t h = K / 2;
    auto wrap = [&](std::int64_t v) {
        std::int64_t m = (v + h) - K * floor_div(v + h, K);  // in [0, K)
        return m - h;
    };
    return {wrap(p.x), wrap(p.y)};
}

/// A point of the torus Z^2_K, stored as its primary-copy representative.
struct TorusPoint {
    LatticePoint p;
    std::int64_t K = 0;

    TorusPoint() = default;
    TorusPoint(LatticePoint q, std::int64_t K_) : p(project_point(q, K_)), K(K_) {}

    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

inline TorusPoint project(LatticePoint p, std::int64_t K) { return TorusPoint(p, K); }

/// Minimal per-coordinate residue in [-K/2, K/2]; the toral squared distance
/// decomposes per coordinate, which is the same as minimizing over the nine
/// adjacent copies.
inline std::int64_t toral_residue(std::int64_t d, std::int64_t K) {
    std::int64_t m = d - K * floor_div(d, K);  // in [0, K)
    if (2 * m > K) m -= K;
    return m;
}

inline __int128 toral_dist_sq(const TorusPoint& a, const TorusPoint& b) {
    if (a.K != b.K) throw std::invalid_argument("toral_distance: mismatched K");
    std::int64_t dx = toral_residue(a.p.x - b.p.x, a.K);
    std::int64_t dy = toral_residue(a.p.y - b.p.y, a.K);
    return static_cast<__int128>(dx) * dx + static_cast<__int128>(dy) * dy;
}

inline double toral_distance(const TorusPoint& a, const TorusPoint& b) {
    return std::sqrt(static_cast<double>(static_cast<long double>(toral_dist_sq(a, b))));
}

struct PointHash {
    std::size_t operator()(const LatticePoint& p) const {
        std::uint64_t h = static_cast<std::uint64_t>(p.x) * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<std::uint64_t>(p.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace torwalk
