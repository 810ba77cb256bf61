#pragma once

#include <cstdint>
#include <vector>

#include "torwalk/point.hpp"
#include "torwalk/step_distribution.hpp"

namespace torwalk {

enum class KernelMethod { Auto, Convolution, Spectral };

struct PotentialKernelTable {
    std::vector<LatticePoint> points;
    std::vector<double> value;         // accelerated estimate of a(x)
    std::vector<double> residual_est;  // last accelerated-step change, per point
    std::int64_t J_used = 0;
    bool converged = false;
    double tolerance = 0.0;
    std::string method;

    double at(LatticePoint p) const;
};

/// a(x) = lim_J sum_{j<=J} [p_j(0) - p_j(x)], evaluated through partial sums
/// with parity averaging and one Richardson step across doubling checkpoints.
/// The convolution route iterates the step law on a grid; the spectral route
/// evaluates the identical partial sums through the characteristic function
/// (the summand is a trigonometric polynomial, so the rectangle rule is exact
/// at sufficiently many nodes). Unit-range walks may alias-safely cap the node
/// count; other walks fall back to convolution when the exact count is large.
PotentialKernelTable potential_kernel(const StepDistribution& dist,
                                      std::vector<LatticePoint> points, double tolerance,
                                      std::int64_t J_max = 1 << 14,
                                      KernelMethod method = KernelMethod::Auto);

/// Raw parity-averaged partial sums (S_J + S_{J-1})/2 for the given
/// checkpoints; exposed so the two evaluation routes can be cross-checked.
std::vector<std::vector<double>> kernel_partial_sums_convolution(
    const StepDistribution& dist, const std::vector<LatticePoint>& points,
    const std::vector<std::int64_t>& checkpoints);
std::vector<std::vector<double>> kernel_partial_sums_spectral(
    const StepDistribution& dist, const std::vector<LatticePoint>& points,
    const std::vector<std::int64_t>& checkpoints);

}  // namespace torwalk
