// Command-line front end: experiments, sweeps, catalog, single plans and
// the session service.

#include "irlkf/catalog.hpp"
#include "irlkf/config.hpp"
#include "irlkf/errors.hpp"
#include "irlkf/parallel.hpp"
#include "irlkf/results.hpp"
#include "irlkf/service.hpp"
#include "irlkf/sweeps.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace irlkf;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    unsigned jobs = default_jobs();
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

std::string keys_footer() {
    const AppConfig defaults;
    const json flat = to_flat_json(defaults);
    std::ostringstream out;
    out << "Config keys (flat JSON object; --set key=value overrides):\n";
    for (const auto& k : config_keys())
        out << "  " << k.name << " = " << flat[k.name].dump() << "\n      " << k.help << "\n";
    return out.str();
}

AppConfig resolve(const Options& opt) {
    AppConfig cfg = opt.config_path.empty() ? AppConfig{} : load_config(opt.config_path);
    std::vector<ConfigError::Issue> issues;
    for (const auto& o : opt.overrides) {
        try {
            apply_override(cfg, o);
        } catch (const ConfigError& e) {
            for (auto i : e.issues()) {
                i.message += " (from --set)";
                issues.push_back(i);
            }
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    if (opt.seed) cfg.experiment.master_seed = *opt.seed;
    validate_config(cfg);
    return cfg;
}

fs::path out_dir(const Options& opt, const char* fallback) {
    fs::path dir = opt.out_dir.empty() ? fs::path(fallback) : fs::path(opt.out_dir);
    fs::create_directories(dir);
    return dir;
}

int cmd_run(const Options& opt) {
    const AppConfig cfg = resolve(opt);
    const EnvironmentCatalog catalog = build_catalog();
    const fs::path dir = out_dir(opt, "results");
    const auto results = run_to_directory(cfg, catalog, dir, opt.jobs);
    const int last = cfg.experiment.iterations;
    for (const auto& [arm, r] : results) {
        std::cout << to_string(arm) << ": " << r.repetition_seeds.size() << " repetitions, " << r.failures.size()
                  << " failed";
        if (last > 0) {
            const Summary e = summarize(r, last, false), g = summarize(r, last, true);
            std::cout << "; final estimate error " << e.mean << " +- " << e.sem << ", regret " << g.mean << " +- "
                      << g.sem;
        }
        std::cout << "\n";
        for (const auto& f : r.failures)
            std::cerr << "  repetition " << f.repetition << " iteration " << f.iteration << ": " << f.message << "\n";
    }
    std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
    return 0;
}

int cmd_sweep(const Options& opt) {
    const AppConfig cfg = resolve(opt);
    const EnvironmentCatalog catalog = build_catalog();
    const Environment& env = catalog.find(cfg.sweep.env_id);
    const ExperimentConfig& x = cfg.experiment;
    const fs::path dir = out_dir(opt, "sweeps");
    fs::path file;
    switch (cfg.sweep.kind) {
        case SweepKind::Laptop:
            file = dir / "sweep_laptop.csv";
            write_file(file, sweep_csv(laptop_sweep(x.initial, env, x.learner, x.planner, cfg.sweep.resolution,
                                                    x.selection.mode, opt.jobs)));
            break;
        case SweepKind::Start:
            file = dir / "sweep_start.csv";
            write_file(file, sweep_csv(start_sweep(x.initial, env, x.learner, x.planner, cfg.sweep.resolution,
                                                   x.selection.mode, opt.jobs)));
            break;
        case SweepKind::Risk:
            file = dir / "risk_trajectories.csv";
            write_file(file, risk_csv(risk_sweep(x.initial, env, cfg.risk.mode.method, x.planner, cfg.risk.backend)));
            break;
    }
    json manifest{{"software", "irlkf"},
                  {"version", kVersion},
                  {"config", to_flat_json(cfg)},
                  {"config_hash", config_hash(cfg)},
                  {"catalog_hash", hex64(catalog.hash())},
                  {"csv", file.filename().string()}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int cmd_catalog(const Options& opt) {
    const EnvironmentCatalog catalog = build_catalog();
    const std::string csv = catalog_csv(catalog);
    std::cout << csv;
    if (!opt.out_dir.empty()) write_file(out_dir(opt, ".") / "catalog.csv", csv);
    return 0;
}

PreferenceEstimate read_estimate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{"", 0, "cannot read estimate file '" + path + "'"}});
    std::stringstream ss;
    ss << in.rdbuf();
    const json doc = json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("mean") || !doc.contains("covariance"))
        throw ConfigError({{"", 0, path + ": expected an object with 'mean' and 'covariance'"}});
    PreferenceEstimate est;
    try {
        est.mean = vector_from_json(doc["mean"]);
        est.covariance = matrix_from_json(doc["covariance"]);
        est.validate();
    } catch (const Error& e) {
        throw ConfigError({{"", 0, path + ": " + e.what()}});
    }
    return est;
}

int cmd_plan(const Options& opt, const std::string& estimate_path, const std::string& mode) {
    AppConfig cfg = resolve(opt);
    if (!mode.empty()) {
        try {
            cfg.risk.mode.attitude = parse_risk_attitude(mode);
        } catch (const Error& e) {
            throw ConfigError({{"--mode", 0, e.what()}});
        }
    }
    const PreferenceEstimate est = estimate_path.empty() ? cfg.experiment.initial : read_estimate(estimate_path);
    const EnvironmentCatalog catalog = build_catalog();
    const Environment& env = catalog.find(cfg.plan_env_id);
    const RiskPlan plan = plan_risk_sensitive(est, env, cfg.risk.mode, cfg.experiment.planner, cfg.risk.backend);
    std::ostringstream csv;
    csv << "waypoint,x,y\n";
    for (std::size_t i = 0; i < plan.trajectory.size(); ++i)
        csv << i << ',' << format_real(plan.trajectory[i].x()) << ',' << format_real(plan.trajectory[i].y()) << '\n';
    const json summary{{"env_id", env.id},
                       {"mode", to_string(cfg.risk.mode.attitude)},
                       {"method", to_string(cfg.risk.mode.method)},
                       {"chosen_gamma", vector_to_json(plan.chosen_gamma)},
                       {"gamma_index", plan.gamma_index},
                       {"features", vector_to_json(feature_vector(plan.trajectory, env))},
                       {"trajectory", trajectory_to_json(plan.trajectory)}};
    if (opt.out_dir.empty()) {
        std::cout << csv.str();
        return 0;
    }
    const fs::path dir = out_dir(opt, ".");
    write_file(dir / "trajectory.csv", csv.str());
    write_file(dir / "plan.json", summary.dump(2) + "\n");
    std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";
    return 0;
}

int cmd_serve(const Options& opt, const std::string& host, int port, const std::string& journal) {
    const AppConfig cfg = resolve(opt);
    std::optional<fs::path> journal_dir;
    if (!journal.empty()) journal_dir = journal;
    SessionStore store(cfg, build_catalog(), journal_dir);
    httplib::Server server;
    install_routes(server, store);
    std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
    if (!server.listen(host, port)) throw Infeasible("cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning reward weights from trajectory corrections with Kalman filters"};
    app.footer(keys_footer());
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON config (flat dotted keys) or a result manifest");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--jobs", opt.jobs, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--seed", opt.seed, "overrides experiment.master_seed");
    app.add_option("--set", opt.overrides, "key=value override, repeatable")->allow_extra_args(false);

    auto* run = app.add_subcommand("run", "run the configured experiment arms");
    auto* sweep = app.add_subcommand("sweep", "laptop, start or risk-mode sweep");
    auto* catalog = app.add_subcommand("catalog", "print the 48 environments");
    auto* plan = app.add_subcommand("plan", "single risk-sensitive plan");
    std::string estimate_path, mode;
    plan->add_option("--estimate", estimate_path, "JSON file with 'mean' and 'covariance'");
    plan->add_option("--mode", mode, "averse, neutral or seeking (overrides risk.attitude)");
    auto* serve = app.add_subcommand("serve", "start the HTTP session service");
    std::string host = "127.0.0.1", journal;
    int port = 8080;
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port");
    serve->add_option("--journal", journal, "directory for per-session JSON-lines journals");
    for (auto* sub : {run, sweep, catalog, plan, serve}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(opt);
        if (*sweep) return cmd_sweep(opt);
        if (*catalog) return cmd_catalog(opt);
        if (*plan) return cmd_plan(opt, estimate_path, mode);
        if (*serve) return cmd_serve(opt, host, port, journal);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
