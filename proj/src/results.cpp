#include "irlkf/results.hpp"

#include "irlkf/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace irlkf {

std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string records_csv(const ExperimentResult& result, Eigen::Index k) {
    std::ostringstream out;
    out << "repetition,iteration,env_id";
    for (Eigen::Index i = 0; i < k; ++i) out << ",theta_hat_" << i;
    for (Eigen::Index i = 0; i < k * k; ++i) out << ",p_flat_" << i;
    out << ",estimate_error,regret,gain_diag_mean\n";
    for (const auto& r : result.records) {
        out << r.repetition << ',' << r.iteration << ',' << r.env_id;
        for (Eigen::Index i = 0; i < k; ++i) out << ',' << format_real(r.mean(i));
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) out << ',' << format_real(r.covariance(i, j));
        out << ',' << format_real(r.estimate_error) << ',' << format_real(r.regret) << ','
            << format_real(r.gain_diag_mean) << '\n';
    }
    return out.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::ostringstream out;
    out << "cell_x,cell_y,predicted_frobenius\n";
    for (const auto& c : cells)
        out << format_real(c.cell_x) << ',' << format_real(c.cell_y) << ',' << format_real(c.predicted_frobenius)
            << '\n';
    return out.str();
}

std::string risk_csv(const std::vector<RiskSweepRow>& rows) {
    std::ostringstream out;
    out << "attitude,gamma_index,waypoint,x,y,laptop_feature,table_feature\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.plan.trajectory.size(); ++i) {
            const Point& p = r.plan.trajectory[i];
            out << to_string(r.attitude) << ',' << r.plan.gamma_index << ',' << i << ',' << format_real(p.x()) << ','
                << format_real(p.y()) << ',' << format_real(r.features(kLaptop)) << ','
                << format_real(r.features(kTable)) << '\n';
        }
    return out.str();
}

std::string catalog_csv(const EnvironmentCatalog& catalog) {
    std::ostringstream out;
    out << "id,start_x,start_y,goal_x,goal_y,laptop_x,laptop_y,table_min_x,table_min_y,table_max_x,table_max_y\n";
    for (const auto& e : catalog) {
        out << e.id;
        for (double v : {e.start.x(), e.start.y(), e.goal.x(), e.goal.y(), e.laptop_center.x(), e.laptop_center.y(),
                         e.table.min.x(), e.table.min.y(), e.table.max.x(), e.table.max.y()})
            out << ',' << format_real(v);
        out << '\n';
    }
    return out.str();
}

json experiment_manifest(const AppConfig& cfg, const std::map<Arm, ExperimentResult>& results,
                         const EnvironmentCatalog& catalog) {
    json m;
    m["software"] = "irlkf";
    m["version"] = kVersion;
    m["config"] = to_flat_json(cfg);
    m["config_hash"] = config_hash(cfg);
    m["catalog_hash"] = hex64(catalog.hash());
    m["seed_rule"] = "repetition r uses derive_seed(master_seed, r); its environment stream derive_seed(seed_r, 0) "
                     "and its user stream derive_seed(seed_r, 1)";
    json arms = json::object();
    for (const auto& [arm, r] : results) {
        json a;
        a["csv"] = std::string(to_string(arm)) + ".csv";
        a["repetitions"] = r.repetition_seeds.size();
        a["repetition_seeds"] = r.repetition_seeds;
        if (arm == Arm::PP) a["learning_rate_schedule"] = r.schedule;
        json failures = json::array();
        for (const auto& f : r.failures)
            failures.push_back(
                {{"repetition", f.repetition}, {"iteration", f.iteration}, {"kind", f.kind}, {"message", f.message}});
        a["failures"] = failures;
        a["regret_warnings"] = r.regret_warnings;
        arms[to_string(arm)] = a;
    }
    m["arms"] = arms;
    return m;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Infeasible("cannot write " + path.string());
    out << content;
    if (!out) throw Infeasible("write failed for " + path.string());
}

std::map<Arm, ExperimentResult> run_to_directory(const AppConfig& cfg, const EnvironmentCatalog& catalog,
                                                 const std::filesystem::path& out, unsigned jobs) {
    validate_config(cfg);
    std::filesystem::create_directories(out);
    ExperimentConfig base = cfg.experiment;
    base.jobs = jobs;
    auto results = run_protocol(base, cfg.arms, cfg.al_repetitions, catalog);
    for (const auto& [arm, r] : results)
        write_file(out / (std::string(to_string(arm)) + ".csv"), records_csv(r, base.initial.dim()));
    write_file(out / "manifest.json", experiment_manifest(cfg, results, catalog).dump(2) + "\n");
    return results;
}

}  // namespace irlkf
