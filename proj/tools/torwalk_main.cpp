#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>

#include "torwalk/acceptance.hpp"
#include "torwalk/experiments.hpp"
#include "torwalk/geometry.hpp"
#include "torwalk/io.hpp"
#include "torwalk/potential_kernel.hpp"
#include "torwalk/solvers.hpp"
#include "torwalk/version.hpp"
#include "torwalk/walk.hpp"

namespace {

using namespace torwalk;

LatticePoint parse_point(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("point: expected x,y got '" + s + "'");
    return {std::stoll(s.substr(0, comma)), std::stoll(s.substr(comma + 1))};
}

std::string default_out_root() {
    const char* env = std::getenv("TORWALK_OUT");
    return env ? env : "results";
}

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string out_root = default_out_root();
    bool force = false;
    std::int64_t seed = 0;
    std::int64_t trials = 0;
    int workers = 0;
};

int finish_experiment(const ExperimentConfig& cfg, const ExperimentResult& res) {
    auto files = write_results(cfg.out_dir, res.experiment, cfg.canonical_text(),
                               res.to_json(), res.summary_csv(), res.plots, cfg.force);
    if (files.skipped)
        std::cout << "results already present at " << files.dir
                  << " (use --force to overwrite)\n";
    else
        std::cout << "results written to " << files.dir << "\n";
    std::cout << res.summary_csv();
    for (const auto& m : res.metrics) {
        if (m.pass && !*m.pass) {
            std::cerr << "tolerance failure: " << m.name << " = " << fmt_g17(m.value)
                      << (m.note.empty() ? "" : " (" + m.note + ")") << "\n";
            return 1;
        }
    }
    return 0;
}

int run_export(const std::string& in_path, const std::string& out_path) {
    auto ends_with = [](const std::string& s, const std::string& suf) {
        return s.size() >= suf.size() &&
               s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    std::string body = read_file(in_path);
    if (ends_with(in_path, ".json")) {
        write_file(out_path, metrics_json_to_csv(body));
        return 0;
    }
    if (ends_with(in_path, ".csv")) {
        write_file(out_path, metrics_csv_to_json(body));
        return 0;
    }
    throw std::invalid_argument("export: input must end in .json or .csv");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"torwalk: exact solvers and Monte Carlo experiments for symmetric "
                 "random walks on Z^2 and the torus Z^2_K"};
    app.set_version_flag("--version", torwalk::kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    std::string walk_spec = "srw";

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "exact linear-algebra solvers");
    solve->require_subcommand(1);

    double radius = 8, width = 0, rr = 8, RR = 64, mm = 4, nn = 8, ss = 0;
    std::int64_t torus_K = 0;
    std::string start_s = "0,0", setting = "interior", points_s = "1,0";
    double tolerance = 1e-3;
    std::string out_file;

    auto add_walk = [&](CLI::App* cmd) {
        cmd->add_option("--walk", walk_spec, "srw | lazy:<eps> | poisson:<l>:<K>:<j> | custom:<path>");
    };

    auto* s_escape = solve->add_subcommand("escape", "expected disc escape time");
    add_walk(s_escape);
    s_escape->add_option("--radius", radius);
    s_escape->add_option("--start", start_s);
    s_escape->add_option("--K", torus_K, "solve on the torus Z^2_K");

    auto* s_green = solve->add_subcommand("green", "truncated Green's function");
    add_walk(s_green);
    s_green->add_option("--radius", radius);
    s_green->add_option("--K", torus_K);
    s_green->add_option("--out", out_file, "CSV export of the center column");

    auto* s_hit = solve->add_subcommand("hit", "probability of hitting 0 before escaping");
    add_walk(s_hit);
    s_hit->add_option("--radius", radius);
    s_hit->add_option("--start", start_s);
    s_hit->add_option("--K", torus_K);

    auto* s_kernel = solve->add_subcommand("kernel", "potential kernel a(x)");
    add_walk(s_kernel);
    s_kernel->add_option("--points", points_s, "semicolon-separated x,y list");
    s_kernel->add_option("--tolerance", tolerance);

    auto* s_ruin = solve->add_subcommand("ruin", "gambler's ruin between two radii");
    add_walk(s_ruin);
    s_ruin->add_option("--r", rr);
    s_ruin->add_option("--R", RR);
    s_ruin->add_option("--start", start_s);
    s_ruin->add_option("--K", torus_K);

    auto* s_harnack = solve->add_subcommand("harnack", "hitting-ratio deviation sweep");
    add_walk(s_harnack);
    s_harnack->add_option("--setting", setting, "interior | interior-toral | exterior");
    s_harnack->add_option("--r", rr);
    s_harnack->add_option("--m", mm);
    s_harnack->add_option("--s", ss);
    s_harnack->add_option("--K", torus_K);

    auto* s_three = solve->add_subcommand("three-set", "disc/annulus/rest partition bounds");
    add_walk(s_three);
    s_three->add_option("--K", torus_K)->required();
    s_three->add_option("--n", nn);
    s_three->add_option("--s", ss);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiments");
    sim->require_subcommand(1);
    std::vector<CLI::App*> sim_cmds;
    for (const char* name : {"excursions", "cover", "late", "successful", "tail",
                             "coupling"}) {
        auto* cmd = sim->add_subcommand(name, std::string("experiment: ") + name);
        cmd->add_option("--config", flags.config_path, "flat key = value file");
        cmd->add_option("--set", flags.overrides, "key=value override")->take_all();
        cmd->add_option("--walk", walk_spec);
        cmd->add_option("--seed", flags.seed);
        cmd->add_option("--trials", flags.trials);
        cmd->add_option("--workers", flags.workers);
        cmd->add_option("--out", flags.out_root);
        cmd->add_flag("--force", flags.force);
        cmd->add_option("--K", torus_K);
        sim_cmds.push_back(cmd);
    }

    // ---- verify ----
    auto* verify = app.add_subcommand("verify", "verification battery");
    auto* v_suite = verify->add_subcommand("suite", "run acceptance criteria");
    std::string suite_name = "core";
    v_suite->add_option("--name", suite_name, "core | fast");
    v_suite->add_option("--seed", flags.seed);
    v_suite->add_option("--workers", flags.workers);

    // ---- export ----
    auto* exp = app.add_subcommand("export", "convert metrics between CSV and JSON");
    std::string in_path, exp_out;
    exp->add_option("--in", in_path)->required();
    exp->add_option("--out", exp_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_escape->parsed()) {
            auto dist = make_walk(walk_spec);
            auto region = torus_K ? Region::toral_disc({0, 0}, radius, torus_K)
                                  : Region::disc({0, 0}, radius);
            GreenTable g(region, dist, 300000);
            std::cout << fmt_g17(g.escape_time(parse_point(start_s))) << "\n";
            return 0;
        }
        if (s_green->parsed()) {
            auto dist = make_walk(walk_spec);
            auto region = torus_K ? Region::toral_disc({0, 0}, radius, torus_K)
                                  : Region::disc({0, 0}, radius);
            GreenTable g(region, dist, 300000);
            std::cout << fmt_g17(g.value({0, 0}, {0, 0})) << "\n";
            if (!out_file.empty()) {
                std::string csv = "x1,y1,x2,y2,value\n";
                const auto& col = g.column({0, 0});
                const auto& pts = g.domain().points();
                for (std::size_t i = 0; i < pts.size(); ++i)
                    csv += std::to_string(pts[i].x) + "," + std::to_string(pts[i].y) +
                           ",0,0," + fmt_g17(col[i]) + "\n";
                write_file(out_file, csv);
            }
            return 0;
        }
        if (s_hit->parsed()) {
            auto dist = make_walk(walk_spec);
            std::optional<std::int64_t> K;
            if (torus_K) K = torus_K;
            std::cout << fmt_g17(hit_point_before_exit(radius, parse_point(start_s),
                                                       dist, K))
                      << "\n";
            return 0;
        }
        if (s_kernel->parsed()) {
            auto dist = make_walk(walk_spec);
            std::vector<LatticePoint> pts;
            std::istringstream in(points_s);
            std::string tok;
            while (std::getline(in, tok, ';'))
                if (!tok.empty()) pts.push_back(parse_point(tok));
            auto table = potential_kernel(dist, pts, tolerance);
            for (std::size_t i = 0; i < table.points.size(); ++i)
                std::cout << table.points[i].x << "," << table.points[i].y << " "
                          << fmt_g17(table.value[i]) << "\n";
            std::cout << "# J=" << table.J_used
                      << " converged=" << (table.converged ? 1 : 0) << "\n";
            return 0;
        }
        if (s_ruin->parsed()) {
            auto dist = make_walk(walk_spec);
            std::optional<std::int64_t> K;
            if (torus_K) K = torus_K;
            auto res = gamblers_ruin(rr, RR, parse_point(start_s), dist, K);
            std::cout << "p_out=" << fmt_g17(res.p_out) << " p_in=" << fmt_g17(res.p_in)
                      << "\n";
            return 0;
        }
        if (s_harnack->parsed()) {
            auto dist = make_walk(walk_spec);
            HarnackSetting hs = setting == "exterior"
                                    ? HarnackSetting::Exterior
                                    : (setting == "interior-toral"
                                           ? HarnackSetting::InteriorToral
                                           : HarnackSetting::Interior);
            std::optional<std::int64_t> K;
            if (torus_K) K = torus_K;
            double band = ss > 0 ? ss : 1.0;
            auto res = harnack_ratio(hs, rr, mm, band, K, dist);
            std::cout << "max_deviation=" << fmt_g17(res.max_deviation)
                      << " targets=" << res.targets_used
                      << " excluded=" << res.targets_excluded << "\n";
            return 0;
        }
        if (s_three->parsed()) {
            auto dist = make_walk(walk_spec);
            double band = ss > 0 ? ss : 4.0;
            auto res = three_set_disc_annulus(torus_K, nn, band, dist);
            std::cout << "psi_sup=" << fmt_g17(res.psi_sup)
                      << " sigma_sup=" << fmt_g17(res.sigma_sup)
                      << " f_A=" << fmt_g17(res.f_A) << " f_B=" << fmt_g17(res.f_B)
                      << "\n"
                      << "green_violation=" << fmt_g17(res.green_sandwich_violation)
                      << " time_violation=" << fmt_g17(res.time_sandwich_violation)
                      << "\n";
            return res.checks_pass(1e-9) ? 0 : 1;
        }
        for (std::size_t i = 0; i < sim_cmds.size(); ++i) {
            if (!sim_cmds[i]->parsed()) continue;
            const char* names[] = {"excursions", "cover", "late", "successful", "tail",
                                   "coupling"};
            const std::string name = names[i];
            KeyValueConfig kv = flags.config_path.empty()
                                    ? KeyValueConfig{}
                                    : KeyValueConfig::parse_file(flags.config_path);
            for (const auto& ov : flags.overrides) {
                auto eq = ov.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("override: expected key=value");
                kv.set(ov.substr(0, eq), ov.substr(eq + 1));
            }
            if (walk_spec != "srw" || !kv.has("walk")) kv.set("walk", walk_spec);
            if (torus_K) kv.set("K", std::to_string(torus_K));
            if (flags.seed) kv.set("seed", std::to_string(flags.seed));
            if (flags.trials) kv.set("trials", std::to_string(flags.trials));
            if (flags.workers) kv.set("workers", std::to_string(flags.workers));
            kv.set("experiment", name);
            auto cfg = ExperimentConfig::from_kv(kv);
            cfg.out_dir = flags.out_root;
            cfg.force = flags.force;
            ExperimentResult res;
            if (name == "excursions") res = excursion_concentration(cfg);
            else if (name == "cover") res = cover_scaling(cfg);
            else if (name == "late") res = late_point_census(cfg);
            else if (name == "successful") res = successful_rate(cfg);
            else if (name == "tail") res = hitting_tail(cfg);
            else res = coupling(cfg);
            return finish_experiment(cfg, res);
        }
        if (v_suite->parsed()) {
            auto report = run_acceptance(suite_name, static_cast<std::uint64_t>(flags.seed),
                                         flags.workers, &std::cout);
            return report.all_pass() ? 0 : 1;
        }
        if (exp->parsed()) return run_export(in_path, exp_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no command\n";
    return 2;
}
