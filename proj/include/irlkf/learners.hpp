#pragma once

#include "irlkf/geometry.hpp"
#include "irlkf/planner.hpp"

#include <functional>
#include <vector>

namespace irlkf {

/// Belief over the human's weights: mean and covariance. The Preference
/// Perceptron carries a covariance only so every learner shares this type;
/// `covariance_tracked` is false for it and the matrix is never updated.
struct PreferenceEstimate {
    Weights mean;
    Mat covariance;
    bool covariance_tracked = true;

    Eigen::Index dim() const { return mean.size(); }
    void validate() const;
};

struct LearnerConfig {
    Mat process_noise = 1e-4 * Mat::Identity(kFeatureCount, kFeatureCount);
    Mat observation_noise = 1e-2 * Mat::Identity(kFeatureCount, kFeatureCount);
    double jacobian_step = 1e-3;
    double sigma_alpha = 1e-3;
    double sigma_beta = 2.0;
    double sigma_kappa = 0.0;
    /// Per-iteration Preference Perceptron learning rates.
    std::vector<double> learning_rate_schedule;

    void validate(Eigen::Index k) const;
};

struct CorrectionObservation {
    Environment env;
    Trajectory robot_trajectory;
    Trajectory corrected_trajectory;

    /// phi(corrected) - phi(robot).
    FeatureVector innovation() const;
};

/// Map from weights to the feature counts the human would produce.
using ObservationModel = std::function<FeatureVector(const Weights&)>;

/// h(theta) = phi(optimal_trajectory(theta, env), env).
ObservationModel planner_observation_model(const Environment& env, const PlannerConfig& planner_cfg);

PreferenceEstimate pp_update(const PreferenceEstimate& est, const FeatureVector& innovation, double alpha);
PreferenceEstimate pp_update(const PreferenceEstimate& est, const CorrectionObservation& obs, double alpha);

/// Central finite differences: column j = [h(theta + eps e_j) - h(theta - eps e_j)] / (2 eps).
Mat observation_jacobian(const ObservationModel& model, const Weights& theta, double eps);
Mat observation_jacobian(const Weights& theta_hat, const Environment& env, const PlannerConfig& planner_cfg,
                         double eps);

struct KalmanStep {
    PreferenceEstimate estimate;
    Mat gain;
};

/// K = (P + M) H^T [H (P + M) H^T + N]^-1. Throws NumericalDegeneracy when the
/// innovation covariance has condition number above 1e12.
Mat kalman_gain(const Mat& predicted_cov, const Mat& jacobian, const Mat& observation_noise);

/// mean + K innovation; covariance (I - K H)(P + M), symmetrized and floored.
PreferenceEstimate apply_gain(const PreferenceEstimate& est, const FeatureVector& innovation, const Mat& gain,
                              const Mat& jacobian, const Mat& process_noise);

KalmanStep ekf_update(const PreferenceEstimate& est, const FeatureVector& innovation, const Mat& jacobian,
                      const LearnerConfig& cfg);
KalmanStep ekf_update(const PreferenceEstimate& est, const CorrectionObservation& obs, const LearnerConfig& cfg,
                      const PlannerConfig& planner_cfg);

/// Unscented update. The innovation is measured against the robot's own
/// trajectory features, i.e. the observation at the mean sigma point, so a
/// correction equal to the robot trajectory leaves the mean unchanged.
KalmanStep ukf_update(const PreferenceEstimate& est, const FeatureVector& innovation,
                      const ObservationModel& model, const LearnerConfig& cfg);
KalmanStep ukf_update(const PreferenceEstimate& est, const CorrectionObservation& obs, const LearnerConfig& cfg,
                      const PlannerConfig& planner_cfg);

/// Posterior covariance of one update, computable before any correction.
Mat predicted_covariance_ekf(const PreferenceEstimate& est, const Mat& jacobian, const LearnerConfig& cfg);
Mat predicted_covariance_ukf(const PreferenceEstimate& est, const ObservationModel& model,
                             const LearnerConfig& cfg);

}  // namespace irlkf
