#include "irlkf/sweeps.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irlkf {

std::vector<Point> sweep_grid(int resolution) {
    if (resolution < 1) throw ContractViolation("sweep resolution must be positive");
    std::vector<Point> cells;
    const double n = resolution;
    for (int j = 0; j < resolution; ++j)
        for (int i = 0; i < resolution; ++i) cells.emplace_back((i + 0.5) / n, (j + 0.5) / n);
    return cells;
}

namespace {

template <typename Place>
std::vector<SweepCell> sweep(const PreferenceEstimate& est, const Environment& base, const LearnerConfig& cfg,
                             const PlannerConfig& planner_cfg, int resolution, PredictionMode mode, unsigned jobs,
                             Place place) {
    est.validate();
    const std::vector<Point> grid = sweep_grid(resolution);
    std::vector<SweepCell> out(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        out[i] = {grid[i].x(), grid[i].y(), std::numeric_limits<double>::quiet_NaN()};
        Environment env = base;
        if (!place(env, grid[i])) return;
        try {
            env.validate();
            out[i].predicted_frobenius = predicted_covariance(est, env, cfg, planner_cfg, mode).norm();
        } catch (const Error&) {
        }
    });
    return out;
}

}  // namespace

std::vector<SweepCell> laptop_sweep(const PreferenceEstimate& est, const Environment& base, const LearnerConfig& cfg,
                                    const PlannerConfig& planner_cfg, int resolution, PredictionMode mode,
                                    unsigned jobs) {
    return sweep(est, base, cfg, planner_cfg, resolution, mode, jobs, [](Environment& env, const Point& p) {
        env.laptop_center = p;
        return true;
    });
}

std::vector<SweepCell> start_sweep(const PreferenceEstimate& est, const Environment& base, const LearnerConfig& cfg,
                                   const PlannerConfig& planner_cfg, int resolution, PredictionMode mode,
                                   unsigned jobs) {
    const double reach = planner_cfg.max_step * static_cast<double>(planner_cfg.horizon);
    return sweep(est, base, cfg, planner_cfg, resolution, mode, jobs, [reach](Environment& env, const Point& p) {
        const double d = (env.goal - p).norm();
        if (d == 0.0 || d > reach) return false;
        env.start = p;
        return true;
    });
}

std::vector<RiskSweepRow> risk_sweep(const PreferenceEstimate& est, const Environment& env, RiskMethod method,
                                     const PlannerConfig& planner_cfg, PlannerBackend backend) {
    std::vector<RiskSweepRow> rows;
    for (RiskAttitude a : {RiskAttitude::Averse, RiskAttitude::Neutral, RiskAttitude::Seeking}) {
        RiskSweepRow row;
        row.attitude = a;
        row.plan = plan_risk_sensitive(est, env, {a, method}, planner_cfg, backend);
        row.features = feature_vector(row.plan.trajectory, env);
        rows.push_back(std::move(row));
    }
    return rows;
}

double distance_to_trajectory(const Point& p, const Trajectory& traj) {
    if (traj.size() == 0) throw ContractViolation("distance to an empty trajectory");
    double best = (p - traj[0]).norm();
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const Point a = traj[i], d = traj[i + 1] - traj[i];
        const double len2 = d.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (p - (a + t * d)).norm());
    }
    return best;
}

}  // namespace irlkf
