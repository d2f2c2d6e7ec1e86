#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace irlkf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::Vector2d;

/// Reward weights. Also used for estimate means and risk-set members.
using Weights = Eigen::VectorXd;
/// Averaged per-waypoint feature counts, every component in [0,1].
using FeatureVector = Eigen::VectorXd;

/// Index of each named feature inside a FeatureVector.
enum Feature : Eigen::Index { kLaptop = 0, kTable = 1 };
inline constexpr Eigen::Index kFeatureCount = 2;

/// Width of the Gaussian laptop-proximity bump.
inline constexpr double kLaptopSigma = 0.1;

struct Rect {
    Point min{0.0, 0.0};
    Point max{0.0, 0.0};

    bool contains_strict(const Point& p) const {
        return p.x() > min.x() && p.x() < max.x() && p.y() > min.y() && p.y() < max.y();
    }
    double area() const { return (max.x() - min.x()) * (max.y() - min.y()); }
};

struct Environment {
    int id = 0;
    Point start{0.0, 0.0};
    Point goal{1.0, 1.0};
    Point laptop_center{0.5, 0.5};
    Rect table;

    /// Throws ContractViolation when the environment is malformed.
    void validate() const;
    Environment translated(const Point& delta) const;
};

/// Ordered waypoints x^0..x^T; endpoints pinned to the environment.
struct Trajectory {
    std::vector<Point> waypoints;

    std::size_t size() const { return waypoints.size(); }
    std::size_t horizon() const { return waypoints.empty() ? 0 : waypoints.size() - 1; }
    const Point& operator[](std::size_t i) const { return waypoints[i]; }
    Point& operator[](std::size_t i) { return waypoints[i]; }

    bool operator==(const Trajectory& other) const { return waypoints == other.waypoints; }

    Trajectory translated(const Point& delta) const;
};

bool in_workspace(const Point& p);

/// Straight segment from start to goal with `horizon` equal steps.
Trajectory straight_line(const Environment& env, std::size_t horizon);

/// Throws ContractViolation unless the trajectory has horizon+1 finite
/// in-workspace waypoints whose endpoints equal the environment's.
/// A horizon of 0 skips the length check.
void validate_trajectory(const Trajectory& traj, const Environment& env, std::size_t horizon = 0);

/// Feature values of a single waypoint (not averaged).
FeatureVector step_features(const Point& p, const Environment& env);

FeatureVector feature_vector(const Trajectory& traj, const Environment& env);

double reward(const Weights& theta, const Trajectory& traj, const Environment& env);

}  // namespace irlkf
