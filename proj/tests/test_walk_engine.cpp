#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/dense_oracle.hpp"
#include "torwalk/walk.hpp"

using namespace torwalk;
namespace ts = torwalk::testsupport;

TEST_CASE("run_until basics") {
    auto srw = StepDistribution::srw();
    auto st = WalkState::planar({0, 0}, srw, make_stream(1, 0));
    // already inside the target: stop_time = 0
    auto rec = run_until(st, Region::disc({0, 0}, 3.0), 1000);
    CHECK(rec.stop_time == 0);
    CHECK_FALSE(rec.censored);

    // censoring is a result, not an error
    auto st2 = WalkState::planar({0, 0}, srw, make_stream(1, 1));
    auto rec2 = run_until(st2, Region::disc_complement({0, 0}, 1e9), 50);
    CHECK(rec2.censored);
    CHECK(rec2.stop_time == 50);
}

TEST_CASE("mean escape time from D(0,2) matches the dense oracle") {
    auto srw = StepDistribution::srw();
    auto states = ts::disc_points(4.0, 2);
    ts::DenseChain chain(states, srw);
    auto t = chain.expected_time();
    auto t2 = chain.expected_time_sq();
    auto i0 = static_cast<std::size_t>(chain.index({0, 0}));
    double exact = t[i0];
    CHECK(exact == doctest::Approx(4.5).epsilon(1e-12));
    double variance = t2[i0] - exact * exact;

    const int N = 100000;
    double sum = 0.0;
    auto target = Region::disc_complement({0, 0}, 2.0);
    for (int i = 0; i < N; ++i) {
        auto st = WalkState::planar({0, 0}, srw, make_stream(42, i));
        sum += static_cast<double>(run_until(st, target, 100000).stop_time);
    }
    double mc = sum / N;
    double sigma = std::sqrt(variance / N);
    CHECK(std::abs(mc - exact) < 3 * sigma + 1e-9);
}

TEST_CASE("escape-time lemma band holds empirically") {
    auto srw = StepDistribution::srw();
    const double n = 8;
    const int N = 20000;
    double sum = 0.0;
    auto target = Region::disc_complement({0, 0}, n);
    for (int i = 0; i < N; ++i) {
        auto st = WalkState::planar({0, 0}, srw, make_stream(43, i));
        sum += static_cast<double>(run_until(st, target, 1000000).stop_time);
    }
    double mc = sum / N;
    CHECK(mc >= n * n - 3.0);  // (n^2 - 0)/gamma^2 with 3-sigma-ish slack
    CHECK(mc <= n * n + 2 * n + 1 + 3.0);
}

TEST_CASE("coupled run: chain, projection law, unit-step equalities") {
    auto srw = StepDistribution::srw();
    for (int i = 0; i < 500; ++i) {
        auto rec = coupled_run({i % 7, 0}, 8, 2, 64, srw, make_stream(7, i), 100000);
        CHECK(rec.chain_holds());
        CHECK(rec.projection_law_holds());
        // unit steps cannot reach a copy without crossing the primary band
        CHECK(rec.planar_annulus.stop_time == rec.pullback_annulus.stop_time);
        CHECK(rec.planar_annulus.stop_time >= 1);
    }
    CHECK_THROWS_AS(coupled_run({0, 0}, 8, 8, 64, srw, make_stream(7, 0), 100),
                    std::invalid_argument);  // n + s >= K/4
    CHECK_THROWS_AS(coupled_run({9, 0}, 8, 2, 64, srw, make_stream(7, 0), 100),
                    std::invalid_argument);  // start outside D(0,n)
}

TEST_CASE("coupled run with a jumping walk") {
    auto jump = StepDistribution::poisson_jump(0.05, 11, 9);
    int censored = 0;
    for (int i = 0; i < 500; ++i) {
        auto rec = coupled_run({i % 2, 0}, 2, 0.5, 11, jump, make_stream(8, i), 50000);
        CHECK(rec.chain_holds());
        CHECK(rec.projection_law_holds());
        if (rec.planar_annulus.censored) ++censored;
    }
    CHECK(censored < 250);  // most trajectories resolve fully
}

TEST_CASE("excursion decomposition bookkeeping") {
    auto srw = StepDistribution::srw();
    TorusPoint center({0, 0}, 48);
    auto st = WalkState::on_torus(TorusPoint({10, 10}, 48), srw, make_stream(9, 0));
    auto rec = decompose_excursions(center, 3, 1, 8, st, 50);
    REQUIRE(rec.excursions.size() == 50);
    std::int64_t cum = rec.tau0;
    for (const auto& e : rec.excursions) {
        CHECK(e.sigma >= 1);
        CHECK(e.sigma <= e.tau);
        CHECK(e.visits >= e.visits_first_leg);
        cum += e.tau;
        CHECK(e.cum == cum);  // strictly increasing by construction
    }
    CHECK(rec.total_tau() == cum);
    // the full elapsed time equals tau0 plus all excursion lengths
    CHECK(st.time == cum);

    CHECK_THROWS_AS(decompose_excursions(center, 3, 1, 30, st, 1, false),
                    std::invalid_argument);  // R >= K/2
    CHECK_THROWS_AS(decompose_excursions(center, 3, 1, 8, st, 1, true),
                    std::invalid_argument);  // lemma geometry R <= K/24
    CHECK_THROWS_AS(decompose_excursions(center, 3, 6, 8, st, 1), std::invalid_argument);
}

namespace {

// independent recount of census quantities from an identical walk replay
struct Recount {
    std::vector<std::int64_t> counts;
    std::int64_t visits = 0;
    std::int64_t steps = 0;
};

Recount recount_census(TorusPoint xhat, const LevelStructure& ls, WalkState st,
                       std::int64_t stop_after_steps) {
    const int n = ls.n;
    Recount rc;
    rc.counts.assign(n + 1, 0);
    std::vector<bool> inside(n + 1, false);
    auto dist_to_center = [&](const WalkState& s) {
        return toral_distance(TorusPoint(s.pos, s.K), xhat);
    };
    double d = dist_to_center(st);
    for (int k = 1; k <= n; ++k) inside[k] = d < ls.radii[k - 1] + ls.widths[k - 1];
    if (st.pos == xhat.p) ++rc.visits;
    for (std::int64_t step = 0; step < stop_after_steps; ++step) {
        st.step();
        ++rc.steps;
        d = dist_to_center(st);
        if (st.pos == xhat.p) ++rc.visits;
        for (int k = 1; k <= n; ++k) {
            if (!inside[k] && d < ls.radii[k - 1] + ls.widths[k - 1]) inside[k] = true;
            if (inside[k] && d >= ls.radii[k]) {
                inside[k] = false;
                ++rc.counts[k];
            }
        }
    }
    return rc;
}

}  // namespace

TEST_CASE("census on a scaled ladder: faithfulness and recount oracle") {
    auto srw = StepDistribution::srw();
    auto ls = LevelStructure::custom({3, 9, 27, 81}, {1, 1, 1, 1}, 5.0, 340.0, 1.0, 0.6,
                                     {0, 0, 8.3, 29.7});
    TorusPoint xhat({100, 100}, 340);
    for (int trial = 0; trial < 5; ++trial) {
        auto st = WalkState::on_torus(TorusPoint({0, 0}, 340), srw,
                                      make_stream(11, trial));
        auto census = census_levels(xhat, ls, st, 500000000, 1000);
        REQUIRE_FALSE(census.censored);
        CHECK(census.band_faithful);  // unit steps cannot skip any band
        CHECK(census.k_min == 2);

        auto replay = WalkState::on_torus(TorusPoint({0, 0}, 340), srw,
                                          make_stream(11, trial));
        auto rc = recount_census(xhat, ls, replay, census.completion_time);
        CHECK(rc.visits == census.counts[0]);
        for (int k = 1; k <= ls.n; ++k) CHECK(rc.counts[k] == census.counts[k]);
        // N_{n,0} = 0 iff xhat unvisited before R_n
        CHECK((census.counts[0] == 0) == (rc.visits == 0));
        bool counts_ok = census.counts[0] == 0;
        for (int k = census.k_min; k <= ls.n - 1; ++k)
            counts_ok = counts_ok &&
                        std::abs(census.counts[k] - ls.v[k]) <= static_cast<double>(k);
        CHECK(census.successful == (census.band_faithful && counts_ok));
    }

    // desk-scale guard rejects oversized K_n
    auto st = WalkState::on_torus(TorusPoint({0, 0}, 340), srw, make_stream(11, 99));
    CHECK_THROWS_AS(census_levels(xhat, ls, st, 1000, 100), std::invalid_argument);
}

TEST_CASE("cover run") {
    auto srw = StepDistribution::srw();

    auto r1 = cover_run(1, srw, make_stream(13, 0));
    CHECK(r1.cover_time == 0);
    CHECK_FALSE(r1.censored);

    auto res = cover_run(16, srw, make_stream(13, 1));
    REQUIRE_FALSE(res.censored);
    CHECK(res.visit_time(TorusPoint({0, 0}, 16)) == 0);
    std::int64_t mx = 0;
    for (auto t : res.visit_times) {
        CHECK(t >= 0);
        mx = std::max(mx, t);
    }
    CHECK(mx == res.cover_time);
    CHECK(res.visit_time(res.last_point) == res.cover_time);

    // identical seed, identical table
    auto res2 = cover_run(16, srw, make_stream(13, 1));
    CHECK(res2.visit_times == res.visit_times);
}

TEST_CASE("cover time of the 2-torus matches the dense position-mask oracle") {
    auto lazy = StepDistribution::lazy_srw(0.25);
    double exact = ts::dense_cover_time_K2(lazy);
    const int N = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < N; ++i) {
        auto res = cover_run(2, lazy, make_stream(14, i));
        REQUIRE_FALSE(res.censored);
        double v = static_cast<double>(res.cover_time);
        sum += v;
        sumsq += v * v;
    }
    double mc = sum / N;
    double sd = std::sqrt((sumsq / N - mc * mc) / N);
    CHECK(std::abs(mc - exact) < 3 * sd + 1e-9);
}

TEST_CASE("late points") {
    auto srw = StepDistribution::srw();
    auto res = cover_run(16, srw, make_stream(15, 0));
    REQUIRE_FALSE(res.censored);

    auto all = late_points(res, 0.0);
    CHECK(all.size() == 16 * 16);

    auto l1 = late_points(res, 0.3);
    auto l2 = late_points(res, 0.6);
    CHECK(l2.size() <= l1.size());
    for (const auto& p : l2)
        CHECK(std::find(l1.begin(), l1.end(), p) != l1.end());

    // censored run: alpha beyond the cap is rejected
    auto censored = cover_run(16, srw, make_stream(15, 1), 0.001);
    if (censored.censored) {
        CHECK_THROWS_AS(late_points(censored, 1e9), std::invalid_argument);
    }
}
