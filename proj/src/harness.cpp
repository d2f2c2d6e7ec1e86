#include "irlkf/harness.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/parallel.hpp"
#include "irlkf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace irlkf {

const char* to_string(Arm arm) {
    switch (arm) {
        case Arm::PP: return "PP";
        case Arm::KF: return "KF";
        case Arm::AL: return "AL";
    }
    return "?";
}

const char* to_string(KalmanVariant variant) { return variant == KalmanVariant::Ekf ? "ekf" : "ukf"; }

Arm parse_arm(const std::string& text) {
    if (text == "PP" || text == "pp") return Arm::PP;
    if (text == "KF" || text == "kf") return Arm::KF;
    if (text == "AL" || text == "al") return Arm::AL;
    throw ContractViolation("unknown arm '" + text + "' (expected PP, KF or AL)");
}

KalmanVariant parse_kalman_variant(const std::string& text) {
    if (text == "ekf") return KalmanVariant::Ekf;
    if (text == "ukf") return KalmanVariant::Ukf;
    throw ContractViolation("unknown filter '" + text + "' (expected ekf or ukf)");
}

void ExperimentConfig::validate() const {
    initial.validate();
    learner.validate(initial.dim());
    planner.validate();
    user.validate();
    if (user.true_theta.size() != initial.dim())
        throw ContractViolation("true weights and initial estimate differ in dimension");
    if (iterations < 0) throw ContractViolation("iterations must be non-negative");
    if (repetitions < 1) throw ContractViolation("repetitions must be positive");
    if (arm == Arm::PP && iterations > 0) {
        if (learner.learning_rate_schedule.size() < static_cast<std::size_t>(iterations))
            throw ContractViolation("PP needs a learning rate for each of the " + std::to_string(iterations) +
                                    " iterations, got " + std::to_string(learner.learning_rate_schedule.size()));
    }
}

std::uint64_t repetition_seed(std::uint64_t master_seed, int repetition) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(repetition));
}
std::uint64_t environment_stream_seed(std::uint64_t seed) { return derive_seed(seed, 0); }
std::uint64_t user_stream_seed(std::uint64_t seed) { return derive_seed(seed, 1); }

std::vector<double> calibrate_learning_rate(const std::vector<std::vector<double>>& logs) {
    if (logs.empty()) throw ContractViolation("no Kalman gain logs to calibrate from");
    const std::size_t n = logs.front().size();
    for (const auto& run : logs)
        if (run.size() != n) throw ContractViolation("gain logs have unequal iteration counts");
    std::vector<double> schedule(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double sum = 0.0;
        for (const auto& run : logs) sum += run[t];
        schedule[t] = std::max(1e-6, sum / static_cast<double>(logs.size()));
    }
    return schedule;
}

std::vector<std::vector<double>> gain_logs(const ExperimentResult& result) {
    std::map<int, std::vector<double>> by_rep;
    for (const auto& rec : result.records) by_rep[rec.repetition].push_back(rec.gain_diag_mean);
    // aborted repetitions are shorter; only complete ones calibrate
    std::size_t longest = 0;
    for (const auto& [rep, log] : by_rep) longest = std::max(longest, log.size());
    std::vector<std::vector<double>> out;
    for (auto& [rep, log] : by_rep)
        if (log.size() == longest) out.push_back(std::move(log));
    return out;
}

double estimate_error(const Weights& theta_hat, const Weights& theta_true) {
    if (theta_hat.size() != theta_true.size()) throw ContractViolation("estimate_error: dimension mismatch");
    return (theta_hat - theta_true).cwiseAbs().sum();
}

RegretBreakdown regret_breakdown(const Weights& theta_true, const PreferenceEstimate& est,
                                 const EnvironmentCatalog& catalog, const PlannerConfig& planner_cfg,
                                 const std::vector<Trajectory>* true_plans) {
    RegretBreakdown out;
    out.per_env.assign(catalog.size(), 0.0);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const Environment& env = catalog[i];
        try {
            const Trajectory best =
                true_plans ? (*true_plans)[i] : optimal_trajectory(theta_true, env, planner_cfg);
            const Trajectory mine = optimal_trajectory(est.mean, env, planner_cfg);
            out.per_env[i] = reward(theta_true, best, env) - reward(theta_true, mine, env);
            out.total += out.per_env[i];
        } catch (const Error& e) {
            out.warnings.push_back("regret: environment " + std::to_string(env.id) + " skipped: " + e.what());
        }
    }
    return out;
}

double regret(const Weights& theta_true, const PreferenceEstimate& est, const EnvironmentCatalog& catalog,
              const PlannerConfig& planner_cfg) {
    return regret_breakdown(theta_true, est, catalog, planner_cfg).total;
}

namespace {

struct RepetitionOutput {
    std::vector<IterationRecord> records;
    std::optional<RepetitionFailure> failure;
    std::vector<std::string> warnings;
};

std::size_t catalog_index(const EnvironmentCatalog& catalog, int id) {
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (catalog[i].id == id) return i;
    throw NotFound("environment id " + std::to_string(id));
}

RepetitionOutput run_repetition(const ExperimentConfig& cfg, const EnvironmentCatalog& catalog,
                                const std::vector<Trajectory>& true_plans, int repetition, unsigned inner_jobs) {
    RepetitionOutput out;
    const std::uint64_t seed = repetition_seed(cfg.master_seed, repetition);
    Rng env_rng(environment_stream_seed(seed));
    UserModel user = cfg.user;
    user.seed = user_stream_seed(seed);
    SelectionConfig selection = cfg.selection;
    selection.jobs = inner_jobs;

    PreferenceEstimate est = cfg.initial;
    est.covariance_tracked = cfg.arm != Arm::PP;
    for (int t = 1; t <= cfg.iterations; ++t) {
        try {
            std::size_t idx = 0;
            if (cfg.arm == Arm::AL) {
                idx = catalog_index(catalog,
                                    select_environment(est, catalog, cfg.learner, cfg.planner, selection).env.id);
            } else {
                idx = static_cast<std::size_t>(uniform_index(env_rng, catalog.size()));
            }
            const Environment& env = catalog[idx];
            const Trajectory robot = optimal_trajectory(est.mean, env, cfg.planner);
            const CorrectionResult corr =
                correct(user, env, robot, cfg.planner, static_cast<std::uint64_t>(t), &true_plans[idx]);
            const FeatureVector innovation = feature_vector(corr.trajectory, env) - feature_vector(robot, env);

            IterationRecord rec;
            if (cfg.arm == Arm::PP) {
                const double alpha = cfg.learner.learning_rate_schedule[static_cast<std::size_t>(t - 1)];
                est = pp_update(est, innovation, alpha);
                rec.gain_diag_mean = alpha;
            } else {
                const KalmanStep step =
                    cfg.filter == KalmanVariant::Ukf
                        ? ukf_update(est, innovation, planner_observation_model(env, cfg.planner), cfg.learner)
                        : ekf_update(est, innovation,
                                     observation_jacobian(est.mean, env, cfg.planner, cfg.learner.jacobian_step),
                                     cfg.learner);
                est = step.estimate;
                rec.gain_diag_mean = step.gain.diagonal().mean();
            }
            RegretBreakdown reg = regret_breakdown(user.true_theta, est, catalog, cfg.planner, &true_plans);
            rec.repetition = repetition;
            rec.iteration = t;
            rec.env_id = env.id;
            rec.mean = est.mean;
            rec.covariance = est.covariance;
            rec.estimate_error = estimate_error(est.mean, user.true_theta);
            rec.regret = reg.total;
            rec.env_regret = std::move(reg.per_env);
            for (auto& w : reg.warnings) out.warnings.push_back(std::move(w));
            out.records.push_back(std::move(rec));
        } catch (const Error& e) {
            out.failure = RepetitionFailure{repetition, t, to_string(e.kind()), e.what()};
            break;
        }
    }
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EnvironmentCatalog& catalog) {
    cfg.validate();
    ExperimentResult result;
    for (int r = 0; r < cfg.repetitions; ++r) result.repetition_seeds.push_back(repetition_seed(cfg.master_seed, r));
    if (cfg.arm == Arm::PP)
        result.schedule.assign(cfg.learner.learning_rate_schedule.begin(),
                               cfg.learner.learning_rate_schedule.begin() + cfg.iterations);
    if (cfg.iterations == 0) return result;

    std::vector<Trajectory> true_plans(catalog.size());
    parallel_for(catalog.size(), cfg.jobs, [&](std::size_t i) {
        true_plans[i] = optimal_trajectory(cfg.user.true_theta, catalog[i], cfg.planner);
    });

    const auto reps = static_cast<std::size_t>(cfg.repetitions);
    // one repetition at a time gets all threads for environment selection
    const unsigned inner = reps == 1 ? cfg.jobs : 1;
    std::vector<RepetitionOutput> outputs(reps);
    parallel_for(reps, cfg.jobs, [&](std::size_t r) {
        outputs[r] = run_repetition(cfg, catalog, true_plans, static_cast<int>(r), inner);
    });
    for (auto& out : outputs) {
        for (auto& rec : out.records) result.records.push_back(std::move(rec));
        if (out.failure) result.failures.push_back(*out.failure);
        for (auto& w : out.warnings) result.regret_warnings.push_back(std::move(w));
    }
    return result;
}

std::map<Arm, ExperimentResult> run_protocol(const ExperimentConfig& base, const std::vector<Arm>& arms,
                                             int al_repetitions, const EnvironmentCatalog& catalog) {
    auto wants = [&](Arm a) { return std::find(arms.begin(), arms.end(), a) != arms.end(); };
    const bool calibrate = wants(Arm::PP) && base.learner.learning_rate_schedule.empty();
    std::map<Arm, ExperimentResult> results;
    if (wants(Arm::KF) || calibrate) {
        ExperimentConfig cfg = base;
        cfg.arm = Arm::KF;
        results[Arm::KF] = run_experiment(cfg, catalog);
    }
    if (wants(Arm::PP)) {
        ExperimentConfig cfg = base;
        cfg.arm = Arm::PP;
        if (calibrate && cfg.iterations > 0)
            cfg.learner.learning_rate_schedule = calibrate_learning_rate(gain_logs(results[Arm::KF]));
        results[Arm::PP] = run_experiment(cfg, catalog);
    }
    if (wants(Arm::AL)) {
        ExperimentConfig cfg = base;
        cfg.arm = Arm::AL;
        cfg.repetitions = al_repetitions;
        results[Arm::AL] = run_experiment(cfg, catalog);
    }
    return results;
}

Summary summarize(const ExperimentResult& result, int iteration, bool use_regret) {
    std::vector<double> values;
    for (const auto& rec : result.records)
        if (rec.iteration == iteration) values.push_back(use_regret ? rec.regret : rec.estimate_error);
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sem = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

}  // namespace irlkf
