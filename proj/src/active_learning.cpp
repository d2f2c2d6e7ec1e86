#include "irlkf/active_learning.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/parallel.hpp"

#include <cmath>
#include <limits>

namespace irlkf {

const char* to_string(CovarianceNorm norm) {
    switch (norm) {
        case CovarianceNorm::Frobenius: return "frobenius";
        case CovarianceNorm::Trace: return "trace";
        case CovarianceNorm::Spectral: return "spectral";
    }
    return "?";
}

const char* to_string(PredictionMode mode) { return mode == PredictionMode::Ekf ? "ekf" : "ukf"; }

CovarianceNorm parse_covariance_norm(const std::string& text) {
    if (text == "frobenius") return CovarianceNorm::Frobenius;
    if (text == "trace") return CovarianceNorm::Trace;
    if (text == "spectral") return CovarianceNorm::Spectral;
    throw ContractViolation("unknown covariance norm '" + text + "'");
}

PredictionMode parse_prediction_mode(const std::string& text) {
    if (text == "ekf") return PredictionMode::Ekf;
    if (text == "ukf") return PredictionMode::Ukf;
    throw ContractViolation("unknown prediction mode '" + text + "'");
}

double covariance_score(const Mat& p, CovarianceNorm norm) {
    switch (norm) {
        case CovarianceNorm::Frobenius: return p.norm();
        case CovarianceNorm::Trace: return p.trace();
        case CovarianceNorm::Spectral: return Eigen::JacobiSVD<Mat>(p).singularValues()[0];
    }
    return p.norm();
}

Mat predicted_covariance(const PreferenceEstimate& est, const Environment& env, const LearnerConfig& cfg,
                         const PlannerConfig& planner_cfg, PredictionMode mode) {
    const ObservationModel model = planner_observation_model(env, planner_cfg);
    if (mode == PredictionMode::Ukf) return predicted_covariance_ukf(est, model, cfg);
    return predicted_covariance_ekf(est, observation_jacobian(model, est.mean, cfg.jacobian_step), cfg);
}

EnvironmentSelection select_environment(const PreferenceEstimate& est, const EnvironmentCatalog& catalog,
                                        const LearnerConfig& cfg, const PlannerConfig& planner_cfg,
                                        const SelectionConfig& selection) {
    const std::size_t n = catalog.size();
    std::vector<double> scores(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> failures(n);
    parallel_for(n, selection.jobs, [&](std::size_t i) {
        try {
            scores[i] = covariance_score(predicted_covariance(est, catalog[i], cfg, planner_cfg, selection.mode),
                                         selection.norm);
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(scores[i])) continue;
        if (best == n || scores[i] < scores[best] || (scores[i] == scores[best] && catalog[i].id < catalog[best].id))
            best = i;
    }
    if (best == n) {
        std::string msg = "no environment could be evaluated:";
        for (std::size_t i = 0; i < n; ++i) msg += " [" + std::to_string(catalog[i].id) + "] " + failures[i];
        throw Infeasible(msg);
    }
    return {catalog[best], scores[best], std::move(scores)};
}

}  // namespace irlkf
