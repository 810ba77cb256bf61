#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "torwalk/point.hpp"
#include "torwalk/rng.hpp"

namespace torwalk {

struct StepEntry {
    LatticePoint offset;
    double prob;
};

/// Walker's alias table: one uniform draw, one table lookup per sample.
class AliasSampler {
  public:
    explicit AliasSampler(const std::vector<double>& probs);

    std::size_t sample_index(std::mt19937_64& g) const {
        double u = uniform01(g) * static_cast<double>(n_);
        auto i = static_cast<std::size_t>(u);
        if (i >= n_) i = n_ - 1;
        double f = u - static_cast<double>(i);
        return f < threshold_[i] ? i : alias_[i];
    }

  private:
    std::size_t n_;
    std::vector<double> threshold_;
    std::vector<std::size_t> alias_;
};

struct ConditionAReport {
    bool pass = false;
    bool via_bounded_support = false;
    double attained_infimum = 0.0;  // inf over sampled band points of P^y(X_1 in D(0,n))
    double lower_bound = 0.0;       // c * exp(-beta * s^{1/4})
    std::size_t band_points_checked = 0;
};

/// A validated symmetric step distribution on Z^2 with scalar covariance
/// Gamma = cI. Immutable after construction; safe to share across workers.
class StepDistribution {
  public:
    /// Validates symmetry, isotropy, normalization; computes derived fields.
    /// Throws std::invalid_argument naming the violated invariant.
    static StepDistribution custom(std::vector<StepEntry> entries, double beta = 1.0);

    static StepDistribution srw();
    static StepDistribution lazy_srw(double epsilon);
    /// Offsets K^j * (+-e1), K^j * (+-e2), j = 0..j_max, with Poisson(lambda)
    /// weights; truncated tail must be below 1e-15 and is folded into the
    /// j = 0 ring to preserve symmetry and total mass.
    static StepDistribution poisson_jump(double lambda, std::int64_t K, int j_max);

    const std::vector<StepEntry>& entries() const { return entries_; }
    double covariance_scalar() const { return c_; }      // Gamma = cI
    double gamma_sq() const { return 2.0 * c_; }         // tr Gamma
    double pi_gamma() const { return pi_gamma_; }        // 2*pi*sqrt(det Gamma) = 2*pi*c
    double beta() const { return beta_; }
    double moment_m() const { return moment_M_; }        // E|X|^(4+2beta), inf flag below
    bool moment_m_finite() const { return moment_M_finite_; }
    bool support_bounded() const { return true; }        // tables are finite by construction
    double max_offset_norm() const { return max_offset_norm_; }
    std::int64_t max_offset_abs() const { return max_offset_abs_; }
    bool strongly_aperiodic_flag() const { return strongly_aperiodic_; }
    bool generates_lattice_flag() const { return generates_z2_; }
    double truncation_residual() const { return truncation_residual_; }

    /// Total probability of |offset| > radius. Nonincreasing in radius.
    double tail_mass(double radius) const;

    /// E|X|^m = sum |x|^m p(x). Exact over the stored table.
    double moment(double m) const;

    /// Condition A: pass immediately for bounded support (every built table is
    /// finite; declared_infinite_range marks truncated infinite-range laws, for
    /// which the band infimum is computed and compared to c*exp(-beta*s^(1/4)).
    ConditionAReport check_condition_a(std::int64_t n, std::int64_t s, double beta,
                                       double c) const;

    LatticePoint sample(std::mt19937_64& g) const {
        return entries_[sampler_.sample_index(g)].offset;
    }

    bool declared_infinite_range() const { return declared_infinite_range_; }

    /// One line per entry "dx dy probability", header "c=<v> beta=<v>";
    /// probabilities at 17 significant digits so the round-trip is exact.
    std::string serialize() const;
    static StepDistribution deserialize(const std::string& text);

  private:
    StepDistribution(std::vector<StepEntry> entries, double beta, bool infinite_range,
                     double truncation_residual);

    std::vector<StepEntry> entries_;
    AliasSampler sampler_;
    double c_ = 0.0;
    double pi_gamma_ = 0.0;
    double beta_ = 0.0;
    double moment_M_ = 0.0;
    bool moment_M_finite_ = true;
    double max_offset_norm_ = 0.0;
    std::int64_t max_offset_abs_ = 0;
    bool strongly_aperiodic_ = false;
    bool generates_z2_ = false;
    bool declared_infinite_range_ = false;
    double truncation_residual_ = 0.0;
};

}  // namespace torwalk
