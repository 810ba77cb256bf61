#include "torwalk/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "torwalk/experiments.hpp"
#include "torwalk/geometry.hpp"
#include "torwalk/io.hpp"
#include "torwalk/potential_kernel.hpp"
#include "torwalk/solvers.hpp"
#include "torwalk/walk.hpp"

namespace torwalk {

namespace {

constexpr double kSrwKernelConstant = 1.0293737328664983;  // (2*euler + log 8) / pi

struct Check {
    bool pass = true;
    std::ostringstream detail;
};

ExperimentConfig base_config(std::uint64_t seed, int workers) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.workers = workers;
    return cfg;
}

ExperimentConfig coupling_srw_config(std::uint64_t seed, int workers, std::int64_t trials) {
    auto cfg = base_config(seed, workers);
    cfg.experiment = "coupling";
    cfg.walk = "srw";
    cfg.K_list = {64};
    cfg.n = 8;
    cfg.s = 2;
    cfg.trials = trials;
    cfg.cap_steps = 200000;
    return cfg;
}

ExperimentConfig coupling_jump_config(std::uint64_t seed, int workers,
                                      std::int64_t trials) {
    auto cfg = base_config(seed, workers);
    cfg.experiment = "coupling";
    cfg.walk = "poisson:0.05:11:9";
    cfg.K_list = {11};
    cfg.n = 2;
    cfg.s = 0.5;
    cfg.trials = trials;
    cfg.cap_steps = 100000;
    return cfg;
}

ExperimentConfig excursion_config(std::uint64_t seed, int workers, std::int64_t dev_trials) {
    auto cfg = base_config(seed, workers);
    cfg.experiment = "excursions";
    cfg.walk = "srw";
    cfg.K_list = {240};
    cfg.r = 8;
    // R = 10 r; the concentration lemma's R <= K/24 would force R = 10, where
    // the additive Green's-function constant alone moves the mean ~20% off
    // the leading-order value (exact solves confirm), so the stated geometry
    // runs with the hypothesis override and says so in the result.
    cfg.R = 80;
    cfg.allow_hypothesis_violation = true;
    cfg.s = 1;
    cfg.trials = 10;
    cfg.excursions = 2000;
    cfg.N_list = {8, 16, 32, 64};
    cfg.dev_trials = dev_trials;
    cfg.delta = 0.1;
    return cfg;
}

ExperimentConfig cover_config(std::uint64_t seed, int workers, std::int64_t trials) {
    auto cfg = base_config(seed, workers);
    cfg.experiment = "cover";
    cfg.walk = "srw";
    cfg.K_list = {32, 64, 128};
    cfg.trials = trials;
    return cfg;
}

ExperimentConfig late_config(std::uint64_t seed, int workers, std::int64_t trials) {
    auto cfg = base_config(seed, workers);
    cfg.experiment = "late";
    cfg.walk = "srw";
    cfg.K_list = {128};
    cfg.alpha_list = {0.25, 0.5, 0.75};
    cfg.trials = trials;
    return cfg;
}

void require(Check& c, bool ok, const std::string& what) {
    if (!ok) {
        c.pass = false;
        c.detail << " [FAIL " << what << "]";
    }
}

Check criterion_exact_oracles() {
    Check c;
    auto srw = StepDistribution::srw();
    GreenTable g(Region::disc_rsq({0, 0}, 4.0), srw);
    double escape = g.escape_time({0, 0});
    double g00 = g.value({0, 0}, {0, 0});
    double hp = hit_point_before_exit(2.0, {1, 0}, srw);
    c.detail << "E0(T)=" << fmt_g17(escape) << " G(0,0)=" << fmt_g17(g00)
             << " P(T0<Texit)=" << fmt_g17(hp);
    require(c, std::abs(escape - 4.5) <= 1e-10, "escape != 4.5");
    require(c, std::abs(g00 - 1.5) <= 1e-10, "green != 1.5");
    require(c, std::abs(hp - 1.0 / 3.0) <= 1e-10, "hit != 1/3");
    return c;
}

Check criterion_escape_bounds() {
    Check c;
    auto srw = StepDistribution::srw();
    for (double n : {8.0, 16.0, 32.0}) {
        GreenTable g(Region::disc({0, 0}, n), srw);
        auto times = g.escape_times();
        const auto& pts = g.domain().points();
        std::int64_t violations = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double xsq = static_cast<double>(static_cast<long double>(norm_sq(pts[i])));
            double lo = (n * n - xsq);  // gamma^2 = 1 for srw
            double hi = lo + 2.0 * n + 1.0;
            if (times[i] < lo - 1e-9 || times[i] > hi + 1e-9) ++violations;
        }
        c.detail << "n=" << n << " starts=" << pts.size() << " violations=" << violations
                 << "; ";
        require(c, violations == 0, "bounds violated at n=" + fmt_g17(n));
    }
    return c;
}

Check criterion_green_asymptotics() {
    Check c;
    auto srw = StepDistribution::srw();
    std::vector<double> ns{32, 64, 128, 256}, cs;
    for (double n : ns) {
        GreenTable g(Region::disc({0, 0}, n), srw, 300000);
        double v = g.value({0, 0}, {0, 0});
        cs.push_back(v - (2.0 / M_PI) * std::log(n));
    }
    // fit G - (2/pi) log n = C + eps n^{-1/4}
    double s11 = 0, s1b = 0, sbb = 0, sy1 = 0, syb = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        double b = std::pow(ns[i], -0.25);
        s11 += 1;
        s1b += b;
        sbb += b * b;
        sy1 += cs[i];
        syb += cs[i] * b;
    }
    double det = s11 * sbb - s1b * s1b;
    double C = (sy1 * sbb - syb * s1b) / det;
    for (std::size_t i = 0; i < ns.size(); ++i)
        c.detail << "c(" << ns[i] << ")=" << fmt_g17(cs[i]) << " ";
    c.detail << "fit C=" << fmt_g17(C);
    require(c, std::abs(C - kSrwKernelConstant) <= 0.02, "constant fit off by > 0.02");
    require(c, std::abs(cs[3] - cs[2]) < std::abs(cs[1] - cs[0]), "not stabilizing");
    return c;
}

Check criterion_potential_kernel() {
    Check c;
    auto srw = StepDistribution::srw();
    std::vector<LatticePoint> pts;
    for (std::int64_t x = -20; x <= 20; ++x)
        for (std::int64_t y = -20; y <= 20; ++y)
            if (norm_sq({x, y}) <= 400) pts.push_back({x, y});
    auto table = potential_kernel(srw, pts, 2e-3, 2048, KernelMethod::Convolution);
    double a1 = table.at({1, 0});
    double worst = 0.0;
    std::map<std::pair<std::int64_t, std::int64_t>, double> byp;
    for (std::size_t i = 0; i < table.points.size(); ++i)
        byp[{table.points[i].x, table.points[i].y}] = table.value[i];
    for (std::size_t i = 0; i < table.points.size(); ++i) {
        auto p = table.points[i];
        worst = std::max(worst,
                         std::abs(table.value[i] - byp.at({-p.x, -p.y})));
    }
    c.detail << "a(e1)=" << fmt_g17(a1) << " J=" << table.J_used
             << " max|a(x)-a(-x)|=" << fmt_g17(worst);
    require(c, std::abs(a1 - 1.0) <= 1e-3, "a(e1) off by > 1e-3");
    require(c, worst <= 1e-6, "symmetry above 1e-6");
    return c;
}

Check criterion_gamblers_ruin() {
    Check c;
    auto srw = StepDistribution::srw();
    auto ruin = gamblers_ruin(8, 64, {16, 16}, srw);  // |x| = sqrt(512) ~ sqrt(rR)
    c.detail << "p_in=" << fmt_g17(ruin.p_in) << " p_out=" << fmt_g17(ruin.p_out);
    require(c, std::abs(ruin.p_in + ruin.p_out - 1.0) <= 1e-9, "p_in + p_out != 1");
    require(c, std::abs(ruin.p_in - 0.5) <= 0.03, "p_in off 1/2 by > 6%");

    // radius sweep along the diagonal, one factorization
    LatticeDomain dom = LatticeDomain::planar({0, 0}, 64, [&](LatticePoint p) {
        auto d = norm_sq(p);
        return !lt_sq(d, 64.0) && lt_sq(d, 4096.0);
    });
    AbsorbingSystem sys(std::move(dom), srw);
    auto p_in = sys.solve(sys.absorption_rhs(
        [&](LatticePoint p) { return lt_sq(norm_sq(p), 64.0); }));
    double prev = 2.0;
    bool monotone = true;
    for (std::int64_t k = 6; k <= 45; ++k) {
        auto i = sys.domain().index_of({k, k});
        if (i < 0) continue;
        double v = p_in[static_cast<std::size_t>(i)];
        if (v > prev + 1e-12) monotone = false;
        prev = v;
    }
    require(c, monotone, "sweep not monotone");
    return c;
}

Check criterion_harnack(const std::string& suite) {
    Check c;
    auto srw = StepDistribution::srw();
    std::vector<double> int_devs;
    for (double m : {2.0, 4.0, 8.0}) {
        auto h = harnack_ratio(HarnackSetting::Interior, 4, m, 1, std::nullopt, srw);
        int_devs.push_back(h.max_deviation);
        c.detail << "int m=" << m << " dev=" << fmt_g17(h.max_deviation) << "; ";
    }
    require(c, int_devs[1] < int_devs[0] && int_devs[2] < int_devs[1],
            "interior deviation not strictly decreasing");
    std::vector<double> ext_ms = suite == "fast" ? std::vector<double>{1, 2}
                                                 : std::vector<double>{2, 4};
    std::vector<double> ext_devs;
    for (double m : ext_ms) {
        auto h = harnack_ratio(HarnackSetting::Exterior, 4, m, 1, std::nullopt, srw, 8);
        ext_devs.push_back(h.max_deviation);
        c.detail << "ext m=" << m << " dev=" << fmt_g17(h.max_deviation) << "; ";
    }
    require(c, ext_devs[1] < ext_devs[0], "exterior deviation not decreasing");
    return c;
}

Check criterion_three_set() {
    Check c;
    auto srw = StepDistribution::srw();
    auto res = three_set_disc_annulus(48, 8, 4, srw);
    c.detail << "green_viol=" << fmt_g17(res.green_sandwich_violation)
             << " time_viol=" << fmt_g17(res.time_sandwich_violation)
             << " order_viol=" << fmt_g17(res.order_violation);
    require(c, res.green_sandwich_violation <= 1e-9, "green sandwich violated");
    require(c, res.time_sandwich_violation <= 1e-9, "time sandwich violated");
    require(c, res.order_violation <= 1e-12, "psi>=rho / sigma>=phi violated");
    return c;
}

Check criterion_coupling(std::uint64_t seed, int workers, std::int64_t trials) {
    Check c;
    for (auto cfg : {coupling_srw_config(seed, workers, trials),
                     coupling_jump_config(seed, workers, trials)}) {
        auto res = coupling(cfg);
        const auto* chain = res.find("chain_violations");
        const auto* law = res.find("projection_law_violations");
        c.detail << cfg.walk << ": chain=" << chain->value << " law=" << law->value
                 << " censored=" << chain->censored << "; ";
        require(c, chain->value == 0.0, "chain violations (" + cfg.walk + ")");
        require(c, law->value == 0.0, "projection-law violations (" + cfg.walk + ")");
    }
    return c;
}

Check criterion_excursions(std::uint64_t seed, int workers, std::int64_t dev_trials) {
    Check c;
    auto res = excursion_concentration(excursion_config(seed, workers, dev_trials));
    const auto* ratio = res.find("mean_tau_over_theory");
    const auto* slope = res.find("deviation_log_slope");
    c.detail << "mean/theory=" << fmt_g17(ratio->value)
             << " slope=" << fmt_g17(slope->value);
    require(c, ratio->pass.value_or(false), "mean tau outside 15% of theory");
    require(c, slope->pass.value_or(false), "deviation trend not negative");
    return c;
}

Check criterion_cover(std::uint64_t seed, int workers, std::int64_t trials) {
    Check c;
    auto res = cover_scaling(cover_config(seed, workers, trials));
    for (const auto& m : res.metrics) {
        if (m.name.rfind("cover_ratio_mean", 0) == 0)
            c.detail << m.name << "=" << fmt_g17(m.value) << "; ";
        if (m.pass) require(c, *m.pass, m.name);
    }
    return c;
}

Check criterion_late(std::uint64_t seed, int workers, std::int64_t trials) {
    Check c;
    auto res = late_point_census(late_config(seed, workers, trials));
    for (const auto& m : res.metrics) {
        if (m.name.rfind("late_exponent_alpha", 0) == 0)
            c.detail << m.name << "=" << fmt_g17(m.value) << "; ";
        if (m.pass) require(c, *m.pass, m.name);
    }
    return c;
}

Check criterion_determinism(std::uint64_t seed, std::int64_t coupling_trials,
                            std::int64_t dev_trials, std::int64_t cover_trials) {
    Check c;
    using Runner = std::function<ExperimentResult(int)>;
    std::vector<std::pair<std::string, Runner>> runs = {
        {"coupling-srw",
         [&](int w) { return coupling(coupling_srw_config(seed, w, coupling_trials)); }},
        {"coupling-jump",
         [&](int w) { return coupling(coupling_jump_config(seed, w, coupling_trials)); }},
        {"excursions",
         [&](int w) {
             return excursion_concentration(excursion_config(seed, w, dev_trials));
         }},
        {"cover", [&](int w) { return cover_scaling(cover_config(seed, w, cover_trials)); }},
        {"late",
         [&](int w) { return late_point_census(late_config(seed, w, cover_trials)); }},
    };
    for (auto& [name, fn] : runs) {
        std::string a = fn(1).to_json();
        std::string b = fn(8).to_json();
        require(c, a == b, name + " differs between 1 and 8 workers");
    }
    c.detail << runs.size() << " experiments compared byte-for-byte";
    return c;
}

}  // namespace

AcceptanceReport run_acceptance(const std::string& suite, std::uint64_t seed, int workers,
                                std::ostream* live) {
    const bool fast = suite == "fast";
    const std::int64_t coupling_trials = fast ? 1000 : 10000;
    const std::int64_t dev_trials = fast ? 60 : 300;
    // the K = 64 vs 128 spread gap is a few percent; resolving it honestly
    // needs four-digit trial counts (still seconds of walking)
    const std::int64_t cover_trials = fast ? 200 : 1500;

    struct Row {
        int number;
        std::string name;
        std::function<Check()> fn;
    };
    std::vector<Row> rows = {
        {1, "exact oracle suite", [&] { return criterion_exact_oracles(); }},
        {2, "escape-time bounds", [&] { return criterion_escape_bounds(); }},
        {3, "green asymptotics", [&] { return criterion_green_asymptotics(); }},
        {4, "potential kernel", [&] { return criterion_potential_kernel(); }},
        {5, "gamblers ruin", [&] { return criterion_gamblers_ruin(); }},
        {6, "harnack trend", [&] { return criterion_harnack(suite); }},
        {7, "three-set sandwich", [&] { return criterion_three_set(); }},
        {8, "toral/planar coupling",
         [&] { return criterion_coupling(seed, workers, coupling_trials); }},
        {9, "excursion concentration",
         [&] { return criterion_excursions(seed, workers, dev_trials); }},
        {10, "cover-time scaling",
         [&] { return criterion_cover(seed, workers, cover_trials); }},
        {11, "late-point exponent",
         [&] { return criterion_late(seed, workers, cover_trials); }},
        {12, "determinism across workers",
         [&] {
             return criterion_determinism(seed, fast ? 200 : 2000, fast ? 30 : 100,
                                          fast ? 3 : 8);
         }},
    };

    AcceptanceReport report;
    for (auto& row : rows) {
        auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        r.number = row.number;
        r.name = row.name;
        try {
            Check c = row.fn();
            r.pass = c.pass;
            r.detail = c.detail.str();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
        if (live)
            (*live) << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.number << " ("
                    << r.name << ") [" << fmt_g17(r.seconds) << " s] " << r.detail
                    << "\n"
                    << std::flush;
        report.criteria.push_back(std::move(r));
    }
    return report;
}

}  // namespace torwalk
