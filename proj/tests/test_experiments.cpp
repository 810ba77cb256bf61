#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/dense_oracle.hpp"
#include "torwalk/experiments.hpp"
#include "torwalk/walk.hpp"

using namespace torwalk;
namespace ts = torwalk::testsupport;

TEST_CASE("walk spec parsing") {
    CHECK(make_walk("srw").entries().size() == 4);
    CHECK(make_walk("lazy:0.5").covariance_scalar() == doctest::Approx(0.25));
    CHECK(make_walk("poisson:0.05:11:9").declared_infinite_range());
    CHECK_THROWS_AS(make_walk("brownian"), std::invalid_argument);
}

TEST_CASE("config parsing rejects unknown keys by name") {
    auto kv = KeyValueConfig::parse_text("K=64\ntrials=20\nseed=42\n");
    auto cfg = ExperimentConfig::from_kv(kv);
    CHECK(cfg.K_list == std::vector<std::int64_t>{64});
    CHECK(cfg.trials == 20);
    CHECK(cfg.seed == 42);

    auto bad = KeyValueConfig::parse_text("trails=20\n");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(bad), doctest::Contains("trails"),
                         std::invalid_argument);
}

TEST_CASE("config text: overrides, comments, line numbers") {
    auto kv = KeyValueConfig::parse_text("# comment\nK = 64 # inline\ntrials=20\n");
    CHECK(kv.get_or("K", "") == "64");
    kv.set("trials", "50");  // flag override wins
    CHECK(kv.get_int("trials", 0) == 50);
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse_text("a=1\nnonsense\n", "f.cfg"),
                         doctest::Contains("f.cfg:2"), std::invalid_argument);
}

TEST_CASE("run_trials is schedule-independent") {
    auto fn = [](std::int64_t i) {
        auto g = make_stream(99, static_cast<std::uint64_t>(i));
        return uniform01(g);
    };
    auto a = run_trials(64, 1, fn);
    auto b = run_trials(64, 4, fn);
    auto c = run_trials(64, 8, fn);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("paley-zygmund") {
    // constant sample: LHS 1 >= RHS (1-l)^2
    auto rep = paley_zygmund_check(std::vector<double>(100, 3.0), 0.5);
    CHECK(rep.lhs == 1.0);
    CHECK(rep.rhs == doctest::Approx(0.25));
    CHECK(rep.holds);

    // Bernoulli(p): E W = p, E W^2 = p, RHS = (1-l)^2 p
    auto g = make_stream(1, 2);
    std::vector<double> bern;
    for (int i = 0; i < 20000; ++i) bern.push_back(uniform01(g) < 0.3 ? 1.0 : 0.0);
    auto rb = paley_zygmund_check(bern, 0.5);
    CHECK(rb.rhs == doctest::Approx(0.25 * 0.3).epsilon(0.05));
    CHECK(rb.holds);

    CHECK_THROWS_AS(paley_zygmund_check(std::vector<double>(5, 0.0), 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(paley_zygmund_check({1.0}, 1.5), std::invalid_argument);

    // late-point counts: the inequality is a theorem
    auto srw = StepDistribution::srw();
    std::vector<double> counts;
    for (int i = 0; i < 40; ++i) {
        auto cov = cover_run(16, srw, make_stream(5, i));
        counts.push_back(static_cast<double>(late_points(cov, 0.3).size()));
    }
    CHECK(paley_zygmund_check(counts, 0.5).holds);
}

TEST_CASE("coupling experiment: zero violations, reproducible payload") {
    ExperimentConfig cfg;
    cfg.experiment = "coupling";
    cfg.walk = "srw";
    cfg.K_list = {48};
    cfg.n = 6;
    cfg.s = 2;
    cfg.trials = 300;
    cfg.seed = 9;
    cfg.cap_steps = 100000;
    auto res = coupling(cfg);
    CHECK(res.find("chain_violations")->value == 0.0);
    CHECK(res.find("projection_law_violations")->value == 0.0);
    CHECK(res.all_pass());

    cfg.workers = 1;
    auto j1 = coupling(cfg).to_json();
    cfg.workers = 8;
    auto j8 = coupling(cfg).to_json();
    CHECK(j1 == j8);
}

TEST_CASE("excursion concentration: delta = 0 saturates the deviation event") {
    ExperimentConfig cfg;
    cfg.experiment = "excursions";
    cfg.walk = "srw";
    cfg.K_list = {96};
    cfg.r = 2;
    cfg.R = 4;
    cfg.s = 1;
    cfg.trials = 4;
    cfg.excursions = 60;
    cfg.N_list = {4, 8};
    cfg.dev_trials = 40;
    cfg.delta = 0.0;
    cfg.seed = 3;
    auto res = excursion_concentration(cfg);
    REQUIRE(!res.plots.empty());
    for (const auto& row : res.plots[0].rows) CHECK(row[1] >= 0.99);

    ExperimentConfig bad = cfg;
    bad.R = 8;  // violates R <= K/24 = 4
    CHECK_THROWS_AS(excursion_concentration(bad), std::invalid_argument);
}

TEST_CASE("hitting tail: b = 0 has probability one, monotone grid") {
    ExperimentConfig cfg;
    cfg.experiment = "tail";
    cfg.walk = "srw";
    cfg.K_list = {24};
    cfg.trials = 300;
    cfg.seed = 4;
    cfg.b_list = {0.0, 0.2, 0.4, 0.8};
    auto res = hitting_tail(cfg);
    REQUIRE(!res.plots.empty());
    CHECK(res.plots[0].rows[0][1] == 1.0);  // b = 0
    CHECK(res.find("tail_monotone")->value == 1.0);
}

TEST_CASE("cover scaling at K = 2 matches the dense oracle") {
    ExperimentConfig cfg;
    cfg.experiment = "cover";
    cfg.walk = "lazy:0.25";
    cfg.K_list = {2};
    cfg.trials = 20000;
    cfg.seed = 6;
    auto res = cover_scaling(cfg);
    const auto* m = res.find("cover_ratio_mean_K2");
    REQUIRE(m != nullptr);
    double norm = 2.0 * std::log(2.0);
    double mc_mean = m->value * norm * norm;
    double exact = ts::dense_cover_time_K2(StepDistribution::lazy_srw(0.25));
    double sd = m->stderr_value * norm * norm;
    CHECK(std::abs(mc_mean - exact) <= 3 * sd);
    CHECK(m->censored == 0);
}

TEST_CASE("late point census: alpha = 0 gives exponent exactly 2") {
    ExperimentConfig cfg;
    cfg.experiment = "late";
    cfg.walk = "srw";
    cfg.K_list = {24};
    cfg.alpha_list = {0.0, 0.5};
    cfg.trials = 6;
    cfg.seed = 8;
    auto res = late_point_census(cfg);
    const auto* m0 = res.find("late_exponent_alpha0");
    REQUIRE(m0 != nullptr);
    CHECK(m0->value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.find("late_nesting_violations")->value == 0.0);
    CHECK(res.find("late_monotone_in_alpha")->value == 1.0);
}

TEST_CASE("successful rate: infeasibility, sub-checks, frequencies") {
    ExperimentConfig cfg;
    cfg.experiment = "successful";
    cfg.walk = "srw";
    cfg.n = 14;
    cfg.a = 1.0;
    cfg.trials = 20;
    cfg.seed = 10;
    cfg.a_list = {0.5, 1.0};
    auto res = successful_rate(cfg);

    const auto* feas = res.find("census_feasible");
    REQUIRE(feas != nullptr);
    CHECK(feas->value == 0.0);  // K_14 is astronomically large

    const auto* comb = res.find("combinatorial_C");
    REQUIRE(comb != nullptr);
    CHECK(comb->value > 1.0);
    CHECK(std::isfinite(comb->value));

    const auto* ab = res.find("ab_half_deviation");
    REQUIRE(ab != nullptr);
    CHECK(ab->value >= 0.0);

    for (double a : {0.5, 1.0}) {
        const auto* f = res.find("successful_freq_a" + fmt_g17(a));
        REQUIRE(f != nullptr);
        CHECK(f->value >= 0.0);
        CHECK(f->value <= 1.0);
    }
    CHECK(res.find("successful_freq_decreasing_in_a") != nullptr);
}

TEST_CASE("experiment result serialization is deterministic") {
    ExperimentResult res;
    res.experiment = "demo";
    res.config_text = "k=v\n";
    res.metrics.push_back({"m1", 1.25, 0.5, 10, 0, true, "note"});
    res.metrics.push_back({"m2", -3.75, 0.0, 10, 2, std::nullopt, ""});
    CHECK(res.to_json() == res.to_json());
    CHECK(res.summary_csv().find("m1,1.25,0.5,10,0,1") != std::string::npos);
    CHECK(res.all_pass());
    res.metrics.push_back({"m3", 0.0, 0.0, 1, 0, false, ""});
    CHECK_FALSE(res.all_pass());
}
