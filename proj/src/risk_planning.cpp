#include "irlkf/risk_planning.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/linalg.hpp"

#include <limits>

namespace irlkf {

const char* to_string(RiskAttitude attitude) {
    switch (attitude) {
        case RiskAttitude::Averse: return "averse";
        case RiskAttitude::Neutral: return "neutral";
        case RiskAttitude::Seeking: return "seeking";
    }
    return "?";
}

const char* to_string(RiskMethod method) { return method == RiskMethod::Reversed ? "reversed" : "nested"; }

RiskAttitude parse_risk_attitude(const std::string& text) {
    if (text == "averse") return RiskAttitude::Averse;
    if (text == "neutral") return RiskAttitude::Neutral;
    if (text == "seeking") return RiskAttitude::Seeking;
    throw ContractViolation("unknown risk mode '" + text + "' (expected averse, neutral or seeking)");
}

RiskMethod parse_risk_method(const std::string& text) {
    if (text == "reversed") return RiskMethod::Reversed;
    if (text == "nested") return RiskMethod::Nested;
    throw ContractViolation("unknown risk method '" + text + "' (expected reversed or nested)");
}

GammaSet gamma_set(const PreferenceEstimate& est) {
    est.validate();
    const Mat root = symmetric_sqrt(est.covariance, "estimate covariance P");
    const Eigen::Index k = est.dim();
    GammaSet g;
    g.members.push_back(est.mean);
    g.provenance.push_back({});
    for (int sign : {+1, -1})
        for (Eigen::Index i = 0; i < k; ++i) {
            g.members.push_back(est.mean + sign * root.col(i));
            g.provenance.push_back({static_cast<int>(i), sign});
        }
    return g;
}

double worst_case_reward(const GammaSet& gamma, const Trajectory& traj, const Environment& env) {
    const FeatureVector phi = feature_vector(traj, env);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& g : gamma.members) worst = std::min(worst, g.dot(phi));
    return worst;
}

namespace {

Trajectory plan_with(const Weights& theta, const Environment& env, const PlannerConfig& cfg,
                     PlannerBackend backend) {
    if (backend == PlannerBackend::Lattice) return lattice_optimal(theta, env, cfg).trajectory;
    return optimal_trajectory(theta, env, cfg);
}

RiskPlan reversed(const GammaSet& gamma, const Environment& env, bool averse, const PlannerConfig& cfg,
                  PlannerBackend backend) {
    RiskPlan out;
    std::vector<Trajectory> plans;
    for (const auto& g : gamma.members) {
        plans.push_back(plan_with(g, env, cfg, backend));
        out.gamma_values.push_back(g.dot(feature_vector(plans.back(), env)));
    }
    std::size_t pick = 0;
    for (std::size_t i = 1; i < plans.size(); ++i) {
        const bool better = averse ? out.gamma_values[i] < out.gamma_values[pick]
                                   : out.gamma_values[i] > out.gamma_values[pick];
        if (better) pick = i;
    }
    out.gamma_index = pick;
    out.chosen_gamma = gamma.members[pick];
    out.trajectory = std::move(plans[pick]);
    return out;
}

RiskPlan nested(const GammaSet& gamma, const Environment& env, bool averse, const PlannerConfig& cfg) {
    constexpr std::size_t kPathLimit = 5'000'000;
    RiskPlan out;
    double best = -std::numeric_limits<double>::infinity();
    enumerate_lattice_paths(env, cfg, kPathLimit, [&](const Trajectory& path) {
        const FeatureVector phi = feature_vector(path, env);
        std::size_t pick = 0;
        double inner = gamma.members[0].dot(phi);
        for (std::size_t i = 1; i < gamma.members.size(); ++i) {
            const double v = gamma.members[i].dot(phi);
            if (averse ? v < inner : v > inner) {
                inner = v;
                pick = i;
            }
        }
        if (inner > best) {
            best = inner;
            out.trajectory = path;
            out.gamma_index = pick;
        }
    });
    out.chosen_gamma = gamma.members[out.gamma_index];
    return out;
}

}  // namespace

RiskPlan plan_risk_sensitive(const PreferenceEstimate& est, const Environment& env, const RiskMode& mode,
                             const PlannerConfig& planner_cfg, PlannerBackend backend) {
    est.validate();
    if (mode.attitude == RiskAttitude::Neutral) {
        RiskPlan out;
        out.trajectory = plan_with(est.mean, env, planner_cfg, backend);
        out.chosen_gamma = est.mean;
        return out;
    }
    const GammaSet gamma = gamma_set(est);
    const bool averse = mode.attitude == RiskAttitude::Averse;
    if (mode.method == RiskMethod::Nested) {
        if (backend != PlannerBackend::Lattice)
            throw Unsupported("nested worst-case planning needs the lattice backend; use the reversed method "
                              "with the continuous planner");
        return nested(gamma, env, averse, planner_cfg);
    }
    return reversed(gamma, env, averse, planner_cfg, backend);
}

}  // namespace irlkf
