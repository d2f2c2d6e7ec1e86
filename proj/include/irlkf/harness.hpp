#pragma once

#include "irlkf/active_learning.hpp"
#include "irlkf/catalog.hpp"
#include "irlkf/learners.hpp"
#include "irlkf/planner.hpp"
#include "irlkf/sim_users.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace irlkf {

/// PP: Preference Perceptron on random environments. KF: Kalman filter on
/// random environments. AL: Kalman filter on actively selected environments.
enum class Arm { PP, KF, AL };
enum class KalmanVariant { Ekf, Ukf };

const char* to_string(Arm arm);
const char* to_string(KalmanVariant variant);
Arm parse_arm(const std::string& text);
KalmanVariant parse_kalman_variant(const std::string& text);

struct ExperimentConfig {
    Arm arm = Arm::KF;
    LearnerConfig learner;
    PlannerConfig planner;
    /// true_theta, kind and correction_fraction are used; the noise seed is
    /// derived per repetition.
    UserModel user;
    /// Filter used by the KF and AL arms.
    KalmanVariant filter = KalmanVariant::Ukf;
    SelectionConfig selection;
    int iterations = 15;
    int repetitions = 100;
    PreferenceEstimate initial;
    std::uint64_t master_seed = 0;
    unsigned jobs = 1;

    void validate() const;
};

struct IterationRecord {
    int repetition = 0;
    /// 1-based; the estimate is the one after this iteration's update.
    int iteration = 0;
    int env_id = 0;
    Weights mean;
    Mat covariance;
    double estimate_error = 0.0;
    double regret = 0.0;
    std::vector<double> env_regret;
    /// Mean of diag(K) for the Kalman arms, the learning rate for PP.
    double gain_diag_mean = 0.0;
};

struct RepetitionFailure {
    int repetition = 0;
    int iteration = 0;
    std::string kind;
    std::string message;
};

struct ExperimentResult {
    std::vector<IterationRecord> records;
    std::vector<RepetitionFailure> failures;
    std::vector<std::uint64_t> repetition_seeds;
    /// Learning rates actually used (PP only).
    std::vector<double> schedule;
    /// Regret evaluations skipped because a planner call failed.
    std::vector<std::string> regret_warnings;
};

/// Seed of repetition r: derive_seed(master_seed, r). Within a repetition
/// the environment stream uses derive_seed(seed_r, 0) and the user's noise
/// derive_seed(seed_r, 1).
std::uint64_t repetition_seed(std::uint64_t master_seed, int repetition);
std::uint64_t environment_stream_seed(std::uint64_t repetition_seed);
std::uint64_t user_stream_seed(std::uint64_t repetition_seed);

/// alpha^t = mean over runs of the per-run gain-diagonal mean at t, floored
/// at 1e-6.
std::vector<double> calibrate_learning_rate(const std::vector<std::vector<double>>& kf_gain_logs);

/// Per-repetition sequences of gain_diag_mean, for calibrate_learning_rate.
std::vector<std::vector<double>> gain_logs(const ExperimentResult& result);

/// L1 distance.
double estimate_error(const Weights& theta_hat, const Weights& theta_true);

struct RegretBreakdown {
    double total = 0.0;
    std::vector<double> per_env;
    std::vector<std::string> warnings;
};

/// Sum over the catalog of theta.phi(xi*) - theta.phi(xi), xi* planned with
/// theta_true and xi with est.mean. `true_plans`, when given, holds xi* per
/// catalog entry. Environments whose planning fails contribute 0 and a
/// warning.
RegretBreakdown regret_breakdown(const Weights& theta_true, const PreferenceEstimate& est,
                                 const EnvironmentCatalog& catalog, const PlannerConfig& planner_cfg,
                                 const std::vector<Trajectory>* true_plans = nullptr);
double regret(const Weights& theta_true, const PreferenceEstimate& est, const EnvironmentCatalog& catalog,
              const PlannerConfig& planner_cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EnvironmentCatalog& catalog);

/// Runs the requested arms in the order KF, PP, AL. Without an explicit
/// schedule, PP's learning rates are calibrated from the KF run, which is
/// then run even if not requested.
std::map<Arm, ExperimentResult> run_protocol(const ExperimentConfig& base, const std::vector<Arm>& arms,
                                             int al_repetitions, const EnvironmentCatalog& catalog);

/// Mean and standard error of a metric at one iteration across repetitions.
struct Summary {
    double mean = 0.0;
    double sem = 0.0;
    int count = 0;
};
Summary summarize(const ExperimentResult& result, int iteration, bool use_regret);

}  // namespace irlkf
