#include "irlkf/learners.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/linalg.hpp"

#include <cmath>
#include <string>

namespace irlkf {

void PreferenceEstimate::validate() const {
    if (mean.size() == 0) throw ContractViolation("estimate mean is empty");
    if (!mean.allFinite()) throw ContractViolation("estimate mean must be finite");
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw ContractViolation("estimate covariance must be " + std::to_string(mean.size()) + "x" +
                                std::to_string(mean.size()));
    if (covariance_tracked && !is_symmetric_psd(covariance, 1e-9))
        throw ContractViolation("estimate covariance must be symmetric positive semi-definite");
}

void LearnerConfig::validate(Eigen::Index k) const {
    auto check = [k](const Mat& m, const char* name) {
        if (m.rows() != k || m.cols() != k)
            throw ContractViolation(std::string(name) + " must be " + std::to_string(k) + "x" + std::to_string(k));
        if (!is_symmetric_psd(m, 1e-12)) throw ContractViolation(std::string(name) + " must be symmetric PSD");
    };
    check(process_noise, "learner.process_noise");
    check(observation_noise, "learner.observation_noise");
    if (!(jacobian_step > 0.0)) throw ContractViolation("learner.jacobian_step must be positive");
    if (!(sigma_alpha > 0.0)) throw ContractViolation("learner.sigma_alpha must be positive");
    for (double a : learning_rate_schedule)
        if (!(a > 0.0)) throw ContractViolation("learning rates must be positive");
}

FeatureVector CorrectionObservation::innovation() const {
    validate_trajectory(robot_trajectory, env);
    validate_trajectory(corrected_trajectory, env, robot_trajectory.horizon());
    return feature_vector(corrected_trajectory, env) - feature_vector(robot_trajectory, env);
}

ObservationModel planner_observation_model(const Environment& env, const PlannerConfig& planner_cfg) {
    return [env, planner_cfg](const Weights& theta) {
        return feature_vector(optimal_trajectory(theta, env, planner_cfg), env);
    };
}

PreferenceEstimate pp_update(const PreferenceEstimate& est, const FeatureVector& innovation, double alpha) {
    if (!(alpha > 0.0)) throw ContractViolation("learning rate must be positive");
    if (innovation.size() != est.dim()) throw ContractViolation("innovation dimension mismatch");
    PreferenceEstimate out = est;
    out.mean = est.mean + alpha * innovation;
    return out;
}

PreferenceEstimate pp_update(const PreferenceEstimate& est, const CorrectionObservation& obs, double alpha) {
    return pp_update(est, obs.innovation(), alpha);
}

Mat observation_jacobian(const ObservationModel& model, const Weights& theta, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("jacobian step must be positive");
    const Eigen::Index k = theta.size();
    Mat jac(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Weights plus = theta, minus = theta;
        plus[j] += eps;
        minus[j] -= eps;
        const FeatureVector hp = model(plus), hm = model(minus);
        if (hp.size() != k) throw ContractViolation("observation dimension must equal weight dimension");
        jac.col(j) = (hp - hm) / (2.0 * eps);
    }
    return jac;
}

Mat observation_jacobian(const Weights& theta_hat, const Environment& env, const PlannerConfig& planner_cfg,
                         double eps) {
    return observation_jacobian(planner_observation_model(env, planner_cfg), theta_hat, eps);
}

Mat kalman_gain(const Mat& predicted_cov, const Mat& jacobian, const Mat& observation_noise) {
    const Mat s = jacobian * predicted_cov * jacobian.transpose() + observation_noise;
    const double cond = condition_number(s);
    if (!(cond <= 1e12))
        throw NumericalDegeneracy("innovation covariance S = H (P + M) H^T + N has condition number " +
                                  std::to_string(cond));
    // K = P H^T S^-1  <=>  S K^T = H P  (S and P symmetric)
    return s.ldlt().solve(jacobian * predicted_cov).transpose();
}

PreferenceEstimate apply_gain(const PreferenceEstimate& est, const FeatureVector& innovation, const Mat& gain,
                              const Mat& jacobian, const Mat& process_noise) {
    const Eigen::Index k = est.dim();
    PreferenceEstimate out = est;
    out.mean = est.mean + gain * innovation;
    const Mat predicted = est.covariance + process_noise;
    out.covariance = stabilize_covariance((Mat::Identity(k, k) - gain * jacobian) * predicted);
    return out;
}

namespace {

void check_inputs(const PreferenceEstimate& est, const FeatureVector& innovation, const LearnerConfig& cfg) {
    est.validate();
    cfg.validate(est.dim());
    if (innovation.size() != est.dim()) throw ContractViolation("innovation dimension mismatch");
    if (!innovation.allFinite()) throw ContractViolation("innovation must be finite");
}

struct SigmaPoints {
    std::vector<Weights> points;
    double mean_weight0 = 0.0;
    double cov_weight0 = 0.0;
    double weight = 0.0;
};

SigmaPoints sigma_points(const Weights& mean, const Mat& predicted, const LearnerConfig& cfg) {
    const auto n = static_cast<double>(mean.size());
    const double a2 = cfg.sigma_alpha * cfg.sigma_alpha;
    const double lambda = a2 * (n + cfg.sigma_kappa) - n;
    const double spread = n + lambda;
    if (!(spread > 0.0)) throw NumericalDegeneracy("sigma-point spread k + lambda must be positive");
    const Mat root = symmetric_sqrt(spread * predicted, "predicted covariance (P + M)");

    SigmaPoints sp;
    sp.points.push_back(mean);
    for (Eigen::Index i = 0; i < mean.size(); ++i) sp.points.push_back(mean + root.col(i));
    for (Eigen::Index i = 0; i < mean.size(); ++i) sp.points.push_back(mean - root.col(i));
    sp.mean_weight0 = lambda / spread;
    sp.cov_weight0 = sp.mean_weight0 + (1.0 - a2 + cfg.sigma_beta);
    sp.weight = 1.0 / (2.0 * spread);
    return sp;
}

struct UnscentedMoments {
    Mat cross;       // P_xy
    Mat innovation;  // P_yy (includes N)
};

UnscentedMoments unscented_moments(const PreferenceEstimate& est, const Mat& predicted,
                                   const ObservationModel& model, const LearnerConfig& cfg) {
    const SigmaPoints sp = sigma_points(est.mean, predicted, cfg);
    const Eigen::Index k = est.dim();
    std::vector<FeatureVector> ys;
    ys.reserve(sp.points.size());
    for (const auto& x : sp.points) {
        ys.push_back(model(x));
        if (ys.back().size() != k) throw ContractViolation("observation dimension must equal weight dimension");
    }
    // weights sum to one, so centre on the mean point for stability
    FeatureVector y_mean = ys[0];
    for (std::size_t i = 1; i < ys.size(); ++i) y_mean += sp.weight * (ys[i] - ys[0]);

    UnscentedMoments m{Mat::Zero(k, k), cfg.observation_noise};
    const FeatureVector d0 = ys[0] - y_mean;
    m.innovation += sp.cov_weight0 * d0 * d0.transpose();
    for (std::size_t i = 1; i < ys.size(); ++i) {
        const FeatureVector dy = ys[i] - y_mean;
        m.innovation += sp.weight * dy * dy.transpose();
        m.cross += sp.weight * (sp.points[i] - est.mean) * dy.transpose();
    }
    return m;
}

Mat unscented_gain(const UnscentedMoments& m) {
    const double cond = condition_number(m.innovation);
    if (!(cond <= 1e12))
        throw NumericalDegeneracy("unscented innovation covariance P_yy has condition number " +
                                  std::to_string(cond));
    return m.innovation.ldlt().solve(m.cross.transpose()).transpose();
}

}  // namespace

KalmanStep ekf_update(const PreferenceEstimate& est, const FeatureVector& innovation, const Mat& jacobian,
                      const LearnerConfig& cfg) {
    check_inputs(est, innovation, cfg);
    if (jacobian.rows() != est.dim() || jacobian.cols() != est.dim())
        throw ContractViolation("observation Jacobian must be k x k");
    const Mat predicted = est.covariance + cfg.process_noise;
    KalmanStep step;
    step.gain = kalman_gain(predicted, jacobian, cfg.observation_noise);
    step.estimate = apply_gain(est, innovation, step.gain, jacobian, cfg.process_noise);
    return step;
}

KalmanStep ekf_update(const PreferenceEstimate& est, const CorrectionObservation& obs, const LearnerConfig& cfg,
                      const PlannerConfig& planner_cfg) {
    const Mat jac = observation_jacobian(est.mean, obs.env, planner_cfg, cfg.jacobian_step);
    return ekf_update(est, obs.innovation(), jac, cfg);
}

KalmanStep ukf_update(const PreferenceEstimate& est, const FeatureVector& innovation,
                      const ObservationModel& model, const LearnerConfig& cfg) {
    check_inputs(est, innovation, cfg);
    const Mat predicted = est.covariance + cfg.process_noise;
    const UnscentedMoments m = unscented_moments(est, predicted, model, cfg);
    KalmanStep step;
    step.gain = unscented_gain(m);
    step.estimate = est;
    step.estimate.mean = est.mean + step.gain * innovation;
    step.estimate.covariance =
        stabilize_covariance(predicted - step.gain * m.innovation * step.gain.transpose());
    return step;
}

KalmanStep ukf_update(const PreferenceEstimate& est, const CorrectionObservation& obs, const LearnerConfig& cfg,
                      const PlannerConfig& planner_cfg) {
    return ukf_update(est, obs.innovation(), planner_observation_model(obs.env, planner_cfg), cfg);
}

Mat predicted_covariance_ekf(const PreferenceEstimate& est, const Mat& jacobian, const LearnerConfig& cfg) {
    est.validate();
    cfg.validate(est.dim());
    const Mat predicted = est.covariance + cfg.process_noise;
    const Mat gain = kalman_gain(predicted, jacobian, cfg.observation_noise);
    return stabilize_covariance((Mat::Identity(est.dim(), est.dim()) - gain * jacobian) * predicted);
}

Mat predicted_covariance_ukf(const PreferenceEstimate& est, const ObservationModel& model,
                             const LearnerConfig& cfg) {
    est.validate();
    cfg.validate(est.dim());
    const Mat predicted = est.covariance + cfg.process_noise;
    const UnscentedMoments m = unscented_moments(est, predicted, model, cfg);
    const Mat gain = unscented_gain(m);
    return stabilize_covariance(predicted - gain * m.innovation * gain.transpose());
}

}  // namespace irlkf
