#include "torwalk/potential_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace torwalk {

namespace {

std::vector<std::int64_t> checkpoint_ladder(std::int64_t J_max) {
    std::vector<std::int64_t> cps;
    for (std::int64_t j = std::max<std::int64_t>(J_max, 64); j >= 32; j /= 2)
        cps.push_back(j);
    std::reverse(cps.begin(), cps.end());
    return cps;
}

}  // namespace

double PotentialKernelTable::at(LatticePoint p) const {
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i] == p) return value[i];
    throw std::invalid_argument("potential kernel: point was not requested");
}

std::vector<std::vector<double>> kernel_partial_sums_convolution(
    const StepDistribution& dist, const std::vector<LatticePoint>& points,
    const std::vector<std::int64_t>& checkpoints) {
    const std::int64_t J_last = checkpoints.back();
    const double c = dist.covariance_scalar();
    std::int64_t maxpt = 0;
    for (const auto& p : points) maxpt = std::max({maxpt, std::abs(p.x), std::abs(p.y)});
    // 8 sigma of spread keeps the discarded tail mass below ~1e-13 per run
    std::int64_t W = static_cast<std::int64_t>(std::ceil(
                         8.0 * std::sqrt(c * static_cast<double>(J_last)))) +
                     4 * dist.max_offset_abs() + 4;
    W = std::max(W, maxpt + 1);
    const std::int64_t side = 2 * W + 1;
    if (side * side > 30000000)
        throw std::invalid_argument(
            "kernel convolution: step range too wide for this grid at the requested J");
    auto idx = [&](std::int64_t x, std::int64_t y) {
        return static_cast<std::size_t>((x + W) * side + (y + W));
    };

    std::vector<double> cur(static_cast<std::size_t>(side) * side, 0.0);
    std::vector<double> next(cur.size(), 0.0);
    cur[idx(0, 0)] = 1.0;

    std::vector<double> S(points.size(), 0.0), S_prev(points.size(), 0.0);
    // j = 0 term: p_0(0) - p_0(x)
    for (std::size_t i = 0; i < points.size(); ++i)
        S[i] = (points[i] == LatticePoint{0, 0}) ? 0.0 : 1.0;

    std::vector<std::vector<double>> out(checkpoints.size(),
                                         std::vector<double>(points.size(), 0.0));
    std::size_t next_cp = 0;
    std::int64_t wa = dist.max_offset_abs();
    for (std::int64_t j = 1; j <= J_last; ++j) {
        wa = std::min<std::int64_t>(
            W, static_cast<std::int64_t>(std::ceil(8.0 * std::sqrt(c * j))) +
                   2 * dist.max_offset_abs() + 2);
        for (std::int64_t x = -wa; x <= wa; ++x)
            for (std::int64_t y = -wa; y <= wa; ++y) {
                double v = 0.0;
                for (const auto& e : dist.entries()) {
                    std::int64_t sx = x - e.offset.x, sy = y - e.offset.y;
                    if (sx < -W || sx > W || sy < -W || sy > W) continue;
                    v += e.prob * cur[idx(sx, sy)];
                }
                next[idx(x, y)] = v;
            }
        std::swap(cur, next);
        S_prev = S;
        double p0 = cur[idx(0, 0)];
        for (std::size_t i = 0; i < points.size(); ++i)
            S[i] += p0 - cur[idx(points[i].x, points[i].y)];
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == j) {
            for (std::size_t i = 0; i < points.size(); ++i)
                out[next_cp][i] = 0.5 * (S[i] + S_prev[i]);
            ++next_cp;
        }
    }
    if (next_cp != checkpoints.size())
        throw std::logic_error("kernel: checkpoints must be ascending and <= J_max");
    return out;
}

std::vector<std::vector<double>> kernel_partial_sums_spectral(
    const StepDistribution& dist, const std::vector<LatticePoint>& points,
    const std::vector<std::int64_t>& checkpoints) {
    const std::int64_t J_last = checkpoints.back();
    std::int64_t maxpt = 0;
    for (const auto& p : points) maxpt = std::max({maxpt, std::abs(p.x), std::abs(p.y)});
    std::int64_t exact_m = J_last * dist.max_offset_abs() + maxpt + 2;
    std::int64_t m = exact_m;
    if (m > 4608) {
        // rectangle-rule aliasing is a shifted copy of p_j; for unit-range
        // walks the Gaussian spread makes it vanish at this node count
        if (dist.max_offset_abs() != 1)
            throw std::invalid_argument(
                "kernel spectral route: node count too large for a jumping walk");
        std::int64_t safe =
            static_cast<std::int64_t>(
                std::ceil(10.0 * std::sqrt(dist.covariance_scalar() *
                                           static_cast<double>(J_last)))) +
            maxpt + 2;
        m = std::max<std::int64_t>(4608, safe);
    }

    std::vector<double> omc(static_cast<std::size_t>(m));  // 1 - cos(2 pi q / m)
    for (std::int64_t q = 0; q <= m / 2; ++q) {
        double sn = std::sin(M_PI * static_cast<double>(q) / static_cast<double>(m));
        omc[static_cast<std::size_t>(q)] = 2.0 * sn * sn;
    }
    // mirror so omc[q] == omc[m-q] bitwise; a(x) = a(-x) then holds exactly
    for (std::int64_t q = m / 2 + 1; q < m; ++q)
        omc[static_cast<std::size_t>(q)] = omc[static_cast<std::size_t>(m - q)];
    auto wrap = [&](std::int64_t v) {
        v %= m;
        return static_cast<std::size_t>(v < 0 ? v + m : v);
    };

    const auto& entries = dist.entries();
    const std::size_t ncp = checkpoints.size(), npt = points.size();
    std::vector<std::vector<double>> acc(ncp, std::vector<double>(npt, 0.0));
    std::vector<double> coef(ncp);

    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t l = 0; l < m; ++l) {
            double w = 0.0;
            for (const auto& e : entries)
                w += e.prob * omc[wrap(i * e.offset.x + l * e.offset.y)];
            const double phi = 1.0 - w;
            const double labs = (w < 0.5)
                                    ? std::log1p(-w)
                                    : std::log(std::max(std::abs(phi), 1e-320));
            for (std::size_t k = 0; k < ncp; ++k) {
                const double J = static_cast<double>(checkpoints[k]);
                double pJ = std::exp(J * labs);  // |phi|^J
                if (phi < 0.0 && (checkpoints[k] & 1)) pJ = -pJ;
                double geom;  // sum_{j<=J} phi^j
                if (w > 1e-9)
                    geom = (1.0 - pJ * phi) / w;
                else
                    geom = (J + 1.0) * (1.0 - 0.5 * J * w);
                coef[k] = geom - 0.5 * pJ;  // parity-averaged partial sum
            }
            for (std::size_t t = 0; t < npt; ++t) {
                double f = omc[wrap(i * points[t].x + l * points[t].y)];
                for (std::size_t k = 0; k < ncp; ++k) acc[k][t] += f * coef[k];
            }
        }
    }
    const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    for (auto& row : acc)
        for (auto& v : row) v *= scale;
    return acc;
}

PotentialKernelTable potential_kernel(const StepDistribution& dist,
                                      std::vector<LatticePoint> points, double tolerance,
                                      std::int64_t J_max, KernelMethod method) {
    if (points.empty()) throw std::invalid_argument("potential kernel: no points");
    auto cps = checkpoint_ladder(J_max);

    if (method == KernelMethod::Auto) {
        bool spectral_ok = dist.max_offset_abs() == 1 ||
                           cps.back() * dist.max_offset_abs() + 128 <= 4608;
        method = (points.size() <= 32 && cps.back() > 2048 && spectral_ok)
                     ? KernelMethod::Spectral
                     : KernelMethod::Convolution;
    }
    auto A = method == KernelMethod::Spectral
                 ? kernel_partial_sums_spectral(dist, points, cps)
                 : kernel_partial_sums_convolution(dist, points, cps);

    PotentialKernelTable out;
    out.points = std::move(points);
    out.tolerance = tolerance;
    out.method = method == KernelMethod::Spectral ? "spectral" : "convolution";
    const std::size_t npt = out.points.size();

    // E_k = 2 A_{2J} - A_J removes the leading 1/J error term
    std::vector<std::vector<double>> E(cps.size(), std::vector<double>(npt, 0.0));
    for (std::size_t k = 1; k < cps.size(); ++k)
        for (std::size_t t = 0; t < npt; ++t) E[k][t] = 2.0 * A[k][t] - A[k - 1][t];

    out.value.assign(npt, 0.0);
    out.residual_est.assign(npt, 0.0);
    for (std::size_t k = 2; k < cps.size(); ++k) {
        double worst = 0.0;
        for (std::size_t t = 0; t < npt; ++t)
            worst = std::max(worst, std::abs(E[k][t] - E[k - 1][t]));
        if (worst < tolerance) {
            for (std::size_t t = 0; t < npt; ++t) {
                out.value[t] = E[k][t];
                out.residual_est[t] = std::abs(E[k][t] - E[k - 1][t]);
            }
            out.J_used = cps[k];
            out.converged = true;
            return out;
        }
    }
    const std::size_t last = cps.size() - 1;
    for (std::size_t t = 0; t < npt; ++t) {
        out.value[t] = E[last][t];
        out.residual_est[t] =
            last >= 1 ? std::abs(E[last][t] - E[last - 1][t]) : 0.0;
    }
    out.J_used = cps[last];
    out.converged = false;
    return out;
}

}  // namespace torwalk
