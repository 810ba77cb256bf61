#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "torwalk/rng.hpp"
#include "torwalk/step_distribution.hpp"

using namespace torwalk;

namespace {

double prob_of(const StepDistribution& d, LatticePoint off) {
    for (const auto& e : d.entries())
        if (e.offset == off) return e.prob;
    return 0.0;
}

}  // namespace

TEST_CASE("srw builder") {
    auto d = StepDistribution::srw();
    CHECK(d.entries().size() == 4);
    CHECK(prob_of(d, {1, 0}) == 0.25);
    CHECK(prob_of(d, {0, -1}) == 0.25);
    CHECK(d.covariance_scalar() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.pi_gamma() == doctest::Approx(M_PI).epsilon(1e-14));
    CHECK(d.gamma_sq() == doctest::Approx(1.0).epsilon(1e-12));  // sum |x|^2 p(x)
    CHECK(d.support_bounded());
    // bipartite: support lies in a coset of the even sublattice,
    // though it generates all of Z^2 as a group
    CHECK_FALSE(d.strongly_aperiodic_flag());
    CHECK(d.generates_lattice_flag());
}

TEST_CASE("lazy srw builder") {
    auto d0 = StepDistribution::lazy_srw(0.0);
    auto srw = StepDistribution::srw();
    REQUIRE(d0.entries().size() == srw.entries().size());
    for (std::size_t i = 0; i < srw.entries().size(); ++i) {
        CHECK(d0.entries()[i].offset == srw.entries()[i].offset);
        CHECK(d0.entries()[i].prob == srw.entries()[i].prob);
    }

    auto d = StepDistribution::lazy_srw(0.5);
    CHECK(d.covariance_scalar() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d.pi_gamma() == doctest::Approx(M_PI / 2).epsilon(1e-14));
    CHECK(prob_of(d, {0, 0}) == 0.5);
    CHECK(d.strongly_aperiodic_flag());  // 0 in the support kills periodicity

    CHECK_THROWS_AS(StepDistribution::lazy_srw(1.0), std::invalid_argument);
    CHECK_THROWS_AS(StepDistribution::lazy_srw(-0.1), std::invalid_argument);
}

TEST_CASE("poisson jump builder") {
    CHECK_THROWS_AS(StepDistribution::poisson_jump(0.1, 10, 8), std::invalid_argument);
    CHECK_THROWS_AS(StepDistribution::poisson_jump(0.1, 3, 0), std::invalid_argument);

    auto d = StepDistribution::poisson_jump(0.01, 3, 10);
    CHECK(d.declared_infinite_range());
    CHECK(d.truncation_residual() < 1e-15);
    // p(e1) = (1/4) e^{-lambda} at j = 0 (residual fold is below 1e-15)
    CHECK(prob_of(d, {1, 0}) == doctest::Approx(0.25 * std::exp(-0.01)).epsilon(1e-14));
    // c = (1/2) e^{(K^2-1) lambda} up to the truncated tail
    CHECK(d.covariance_scalar() ==
          doctest::Approx(0.5 * std::exp(8 * 0.01)).epsilon(1e-10));

    double total = 0.0;
    for (const auto& e : d.entries()) total += e.prob;
    CHECK(total + d.truncation_residual() == doctest::Approx(1.0).epsilon(1e-15));

    // lambda -> 0: collapses to srw in total variation
    auto tiny = StepDistribution::poisson_jump(1e-9, 3, 4);
    auto srw = StepDistribution::srw();
    double tv = 0.0;
    for (const auto& e : tiny.entries())
        tv += std::abs(e.prob - prob_of(srw, e.offset));
    CHECK(tv < 1e-6);
}

TEST_CASE("custom validation names the failing invariant") {
    CHECK_NOTHROW(StepDistribution::custom(
        {{{1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, 1}, 0.25}, {{0, -1}, 0.25}}));

    CHECK_THROWS_WITH_AS(StepDistribution::custom({{{1, 0}, 0.5}, {{-1, 0}, 0.3},
                                                   {{0, 1}, 0.1}, {{0, -1}, 0.1}}),
                         doctest::Contains("symmetry"), std::invalid_argument);

    CHECK_THROWS_WITH_AS(StepDistribution::custom({{{1, 0}, 0.3}, {{-1, 0}, 0.3},
                                                   {{0, 1}, 0.3}, {{0, -1}, 0.3}}),
                         doctest::Contains("sum"), std::invalid_argument);

    // anisotropic: more mass on the x axis
    CHECK_THROWS_WITH_AS(
        StepDistribution::custom({{{2, 0}, 0.25}, {{-2, 0}, 0.25},
                                  {{0, 1}, 0.25}, {{0, -1}, 0.25}}),
        doctest::Contains("isotropic"), std::invalid_argument);

    // diagonal walk: accepted with c = 1, flagged as not strongly aperiodic
    auto diag = StepDistribution::custom(
        {{{1, 1}, 0.25}, {{-1, -1}, 0.25}, {{1, -1}, 0.25}, {{-1, 1}, 0.25}});
    CHECK(diag.covariance_scalar() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(diag.strongly_aperiodic_flag());
    CHECK_FALSE(diag.generates_lattice_flag());
}

TEST_CASE("moments") {
    auto srw = StepDistribution::srw();
    CHECK(srw.moment(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(srw.moment(6) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(srw.moment(0) == doctest::Approx(1.0).epsilon(1e-15));
    auto lazy = StepDistribution::lazy_srw(0.25);
    CHECK(lazy.moment(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lazy.moment(2) == doctest::Approx(lazy.gamma_sq()).epsilon(1e-10));
    CHECK(srw.moment(2) == doctest::Approx(srw.gamma_sq()).epsilon(1e-10));
}

TEST_CASE("tail mass is nonincreasing") {
    auto d = StepDistribution::poisson_jump(0.05, 3, 12);
    CHECK(d.tail_mass(0) <= 1.0);
    double prev = 2.0;
    for (double r : {0.0, 0.5, 1.0, 2.9, 3.0, 9.0, 27.0, 1e6}) {
        double t = d.tail_mass(r);
        CHECK(t <= prev);
        prev = t;
    }
    CHECK(d.tail_mass(1e18) == 0.0);
}

TEST_CASE("condition A") {
    auto srw = StepDistribution::srw();
    auto rep = srw.check_condition_a(16, 4, 1.0, 0.1);
    CHECK(rep.pass);
    CHECK(rep.via_bounded_support);

    auto jump = StepDistribution::poisson_jump(0.2, 3, 14);
    auto rep2 = jump.check_condition_a(8, 3, 1.0, 0.01);
    CHECK_FALSE(rep2.via_bounded_support);
    CHECK(rep2.band_points_checked > 0);
    CHECK(rep2.attained_infimum > 0.0);  // unit ring enters from anywhere adjacent

    // the band includes points at distance exactly n
    auto rep3 = jump.check_condition_a(3, 1, 1.0, 0.01);
    CHECK(rep3.band_points_checked >= 4);  // (3,0) and mates sit at |y| = n
}

TEST_CASE("sampling: frequencies, chi-square, determinism") {
    auto srw = StepDistribution::srw();
    auto g = make_stream(123, 0);
    const int N = 1000000;
    std::map<std::pair<std::int64_t, std::int64_t>, int> counts;
    for (int i = 0; i < N; ++i) {
        auto o = srw.sample(g);
        counts[{o.x, o.y}]++;
    }
    REQUIRE(counts.size() == 4);
    double sigma = std::sqrt(0.25 * 0.75 / N);
    double chi2 = 0.0;
    for (const auto& [k, c] : counts) {
        double f = static_cast<double>(c) / N;
        CHECK(std::abs(f - 0.25) < 4 * sigma);
        double expd = 0.25 * N;
        chi2 += (c - expd) * (c - expd) / expd;
    }
    CHECK(chi2 < 16.27);  // chi-square(3) 0.999 quantile

    auto lazy = StepDistribution::lazy_srw(0.3);
    auto g2 = make_stream(123, 1);
    int zeros = 0;
    for (int i = 0; i < N; ++i)
        if (lazy.sample(g2) == LatticePoint{0, 0}) ++zeros;
    double fz = static_cast<double>(zeros) / N;
    CHECK(std::abs(fz - 0.3) < 4 * std::sqrt(0.3 * 0.7 / N));

    // identical seed, identical draw sequence
    auto ga = make_stream(77, 3), gb = make_stream(77, 3);
    for (int i = 0; i < 1000; ++i) CHECK(srw.sample(ga) == srw.sample(gb));
}

TEST_CASE("chi-square for each builtin at 1e6 draws") {
    for (const auto& d : {StepDistribution::srw(), StepDistribution::lazy_srw(0.25),
                          StepDistribution::poisson_jump(0.1, 3, 12)}) {
        auto g = make_stream(2024, 9);
        const int N = 1000000;
        std::map<std::pair<std::int64_t, std::int64_t>, int> counts;
        for (int i = 0; i < N; ++i) {
            auto o = d.sample(g);
            counts[{o.x, o.y}]++;
        }
        double chi2 = 0.0;
        int dof = 0;
        for (const auto& e : d.entries()) {
            double expd = e.prob * N;
            if (expd < 10) continue;  // merge ultra-rare cells out of the statistic
            double obs = 0.0;
            auto it = counts.find({e.offset.x, e.offset.y});
            if (it != counts.end()) obs = it->second;
            chi2 += (obs - expd) * (obs - expd) / expd;
            ++dof;
        }
        // 0.999 quantile of chi-square with dof-1 degrees, generous cap
        double q = (dof - 1) + 4.0 * std::sqrt(2.0 * (dof - 1)) + 8.0;
        CHECK(chi2 < q);
    }
}

TEST_CASE("serialization round-trips exactly") {
    for (const auto& d : {StepDistribution::srw(), StepDistribution::lazy_srw(0.37),
                          StepDistribution::poisson_jump(0.05, 11, 9)}) {
        auto text = d.serialize();
        auto back = StepDistribution::deserialize(text);
        REQUIRE(back.entries().size() == d.entries().size());
        for (std::size_t i = 0; i < d.entries().size(); ++i) {
            CHECK(back.entries()[i].offset == d.entries()[i].offset);
            CHECK(back.entries()[i].prob == d.entries()[i].prob);  // bitwise
        }
        CHECK(back.covariance_scalar() == d.covariance_scalar());
        CHECK(back.pi_gamma() == d.pi_gamma());
        CHECK(back.beta() == d.beta());
        CHECK(back.serialize() == text);
    }
    CHECK_THROWS_AS(StepDistribution::deserialize("nonsense"), std::invalid_argument);
}
