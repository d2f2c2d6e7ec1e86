#pragma once

#include "irlkf/learners.hpp"
#include "irlkf/planner.hpp"

#include <string>
#include <vector>

namespace irlkf {

/// Where a Gamma member came from: the mean (column -1, sign 0) or
/// mean + sign * column `column` of sqrt(P).
struct GammaProvenance {
    int column = -1;
    int sign = 0;
};

/// 2k + 1 weight hypotheses one standard deviation around the mean.
/// Member 0 is the mean; members i and i + k (i = 1..k) mirror each other.
struct GammaSet {
    std::vector<Weights> members;
    std::vector<GammaProvenance> provenance;
};

GammaSet gamma_set(const PreferenceEstimate& est);

enum class RiskAttitude { Averse, Neutral, Seeking };
/// Nested: argmax over trajectories of the min (max) over Gamma, exact on
/// the lattice only. Reversed: pick the Gamma member whose own optimum is
/// worst (best), then plan with it.
enum class RiskMethod { Reversed, Nested };
enum class PlannerBackend { Continuous, Lattice };

struct RiskMode {
    RiskAttitude attitude = RiskAttitude::Neutral;
    RiskMethod method = RiskMethod::Reversed;
};

const char* to_string(RiskAttitude attitude);
const char* to_string(RiskMethod method);
RiskAttitude parse_risk_attitude(const std::string& text);
RiskMethod parse_risk_method(const std::string& text);

struct RiskPlan {
    Trajectory trajectory;
    Weights chosen_gamma;
    std::size_t gamma_index = 0;
    /// Reversed: best achievable reward of each member. Nested: empty.
    std::vector<double> gamma_values;
};

/// min over Gamma of gamma . phi(traj, env).
double worst_case_reward(const GammaSet& gamma, const Trajectory& traj, const Environment& env);

/// Throws Unsupported for the nested method on the continuous backend.
RiskPlan plan_risk_sensitive(const PreferenceEstimate& est, const Environment& env, const RiskMode& mode,
                             const PlannerConfig& planner_cfg, PlannerBackend backend = PlannerBackend::Continuous);

}  // namespace irlkf
