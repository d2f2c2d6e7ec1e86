#pragma once

#include "irlkf/catalog.hpp"
#include "irlkf/learners.hpp"
#include "irlkf/planner.hpp"

#include <string>
#include <vector>

namespace irlkf {

enum class CovarianceNorm { Frobenius, Trace, Spectral };
/// Which filter linearization predicts the posterior covariance.
enum class PredictionMode { Ekf, Ukf };

const char* to_string(CovarianceNorm norm);
const char* to_string(PredictionMode mode);
CovarianceNorm parse_covariance_norm(const std::string& text);
PredictionMode parse_prediction_mode(const std::string& text);

struct SelectionConfig {
    CovarianceNorm norm = CovarianceNorm::Frobenius;
    PredictionMode mode = PredictionMode::Ekf;
    unsigned jobs = 1;
};

double covariance_score(const Mat& p, CovarianceNorm norm);

/// (I - K H)(P + M) for env with H, K evaluated at est.mean; no correction
/// is consumed. In Ukf mode the unscented posterior covariance is used.
Mat predicted_covariance(const PreferenceEstimate& est, const Environment& env, const LearnerConfig& cfg,
                         const PlannerConfig& planner_cfg, PredictionMode mode = PredictionMode::Ekf);

struct EnvironmentSelection {
    Environment env;
    double score = 0.0;
    /// Score per catalog entry, in catalog order; NaN where planning failed.
    std::vector<double> scores;
};

/// Exhaustive argmin of the predicted covariance norm over the catalog.
/// Ties go to the lowest environment id. Throws Infeasible (listing every
/// failure) if no environment can be evaluated.
EnvironmentSelection select_environment(const PreferenceEstimate& est, const EnvironmentCatalog& catalog,
                                        const LearnerConfig& cfg, const PlannerConfig& planner_cfg,
                                        const SelectionConfig& selection = {});

}  // namespace irlkf
