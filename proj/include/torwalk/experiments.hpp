#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torwalk/io.hpp"
#include "torwalk/step_distribution.hpp"

namespace torwalk {

/// Walk spec strings: "srw", "lazy:<eps>", "poisson:<lambda>:<K>:<jmax>",
/// "custom:<path>" (serialized table).
StepDistribution make_walk(const std::string& spec);

struct ExperimentConfig {
    std::string experiment;
    std::string walk = "srw";
    std::vector<std::int64_t> K_list{64};
    double r = 0, R = 0, s = 0, n = 0;
    std::vector<double> alpha_list;
    double a = 0, rho = 0, gamma_bar = 10;
    std::int64_t trials = 1;
    std::uint64_t seed = 0;
    double cap_multiplier = 64.0;
    std::int64_t cap_steps = 0;  // 0 = per-experiment default
    int workers = 0;             // parallelism hint; must not affect results
    std::string out_dir;
    bool force = false;

    std::int64_t excursions = 2000;            // per trial
    bool allow_hypothesis_violation = false;   // run R > K/24 anyway, noted
    std::vector<std::int64_t> N_list;          // deviation grid
    std::int64_t dev_trials = 400;             // trials per deviation grid point
    double delta = 0.1;                        // deviation window half-width
    std::string deviation_center = "empirical";  // or "theory"
    std::vector<double> b_list;                // hitting-tail grid
    std::vector<double> a_list;                // successful-rate grid
    std::int64_t max_K = 100000;               // census desk guard
    std::vector<double> scaled_radii;          // desk-scale census ladder
    std::vector<double> scaled_widths;
    double scaled_wide = 0.0;
    std::int64_t scaled_K = 0;
    double ab_r = 4.0, ab_g = 4.0;             // gambler's-ruin half-check triple

    std::map<std::string, double> tolerances;  // per-metric overrides
    double tol(const std::string& name, double def) const {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? def : it->second;
    }

    /// Reads every known key; unknown keys in `kv` are rejected by name.
    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    std::string canonical_text() const;  // config echo for manifests/hashing
};

struct Metric {
    std::string name;
    double value = 0.0;
    double stderr_value = 0.0;
    std::int64_t trials = 0;
    std::int64_t censored = 0;
    std::optional<bool> pass;
    std::string note;
};

struct ExperimentResult {
    std::string experiment;
    std::string config_text;
    std::vector<Metric> metrics;
    std::vector<PlotSeries> plots;

    bool all_pass() const;
    const Metric* find(const std::string& name) const;
    std::string to_json() const;     // deterministic payload, no timestamps
    std::string summary_csv() const;
};

ExperimentResult excursion_concentration(const ExperimentConfig& cfg);
ExperimentResult hitting_tail(const ExperimentConfig& cfg);
ExperimentResult cover_scaling(const ExperimentConfig& cfg);
ExperimentResult late_point_census(const ExperimentConfig& cfg);
ExperimentResult successful_rate(const ExperimentConfig& cfg);
ExperimentResult coupling(const ExperimentConfig& cfg);

struct PaleyZygmundReport {
    double lhs = 0.0;           // P(W >= lambda E W)
    double rhs = 0.0;           // (1-lambda)^2 (E W)^2 / E(W^2)
    double slack = 0.0;         // 4 sigma sampling allowance
    bool holds = false;
};
/// The inequality is a theorem; a violation beyond sampling error flags a bug.
PaleyZygmundReport paley_zygmund_check(const std::vector<double>& values, double lambda);

/// Runs trials in index order across `workers` threads; results land in a
/// vector indexed by trial, so scheduling cannot affect any aggregate.
std::vector<double> run_trials(std::int64_t trials, int workers,
                               const std::function<double(std::int64_t)>& fn);

}  // namespace torwalk
