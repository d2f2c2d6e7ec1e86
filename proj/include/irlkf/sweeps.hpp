#pragma once

#include "irlkf/active_learning.hpp"
#include "irlkf/risk_planning.hpp"

#include <vector>

namespace irlkf {

/// One grid cell of a placement sweep. NaN when the placement is invalid
/// or its prediction failed.
struct SweepCell {
    double cell_x = 0.0;
    double cell_y = 0.0;
    double predicted_frobenius = 0.0;
};

/// Cell centers ((i + 0.5) / n, (j + 0.5) / n), row by row in y.
std::vector<Point> sweep_grid(int resolution);

/// Moves the laptop of `base` to every cell and scores the predicted
/// posterior covariance of `est` there.
std::vector<SweepCell> laptop_sweep(const PreferenceEstimate& est, const Environment& base, const LearnerConfig& cfg,
                                    const PlannerConfig& planner_cfg, int resolution, PredictionMode mode,
                                    unsigned jobs = 1);

/// Same with the start state; cells that coincide with the goal or cannot
/// reach it under the speed limit are NaN.
std::vector<SweepCell> start_sweep(const PreferenceEstimate& est, const Environment& base, const LearnerConfig& cfg,
                                   const PlannerConfig& planner_cfg, int resolution, PredictionMode mode,
                                   unsigned jobs = 1);

struct RiskSweepRow {
    RiskAttitude attitude = RiskAttitude::Neutral;
    RiskPlan plan;
    FeatureVector features;
};

/// Averse, neutral and seeking plans for one environment.
std::vector<RiskSweepRow> risk_sweep(const PreferenceEstimate& est, const Environment& env, RiskMethod method,
                                     const PlannerConfig& planner_cfg, PlannerBackend backend);

/// Shortest distance from p to the polyline through the waypoints.
double distance_to_trajectory(const Point& p, const Trajectory& traj);

}  // namespace irlkf
