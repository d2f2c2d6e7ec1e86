#include "irlkf/geometry.hpp"

#include "irlkf/errors.hpp"

#include <cmath>
#include <string>

namespace irlkf {

namespace {

std::string describe(const Point& p) {
    return "(" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ")";
}

}  // namespace

bool in_workspace(const Point& p) {
    return std::isfinite(p.x()) && std::isfinite(p.y()) && p.x() >= 0.0 && p.x() <= 1.0 &&
           p.y() >= 0.0 && p.y() <= 1.0;
}

void Environment::validate() const {
    const std::string tag = "environment " + std::to_string(id);
    for (const Point* p : {&start, &goal, &laptop_center, &table.min, &table.max}) {
        if (!in_workspace(*p)) throw ContractViolation(tag + ": point " + describe(*p) + " outside [0,1]^2");
    }
    if (!(table.max.x() > table.min.x() && table.max.y() > table.min.y()))
        throw ContractViolation(tag + ": table rectangle has no area");
    if (start == goal) throw ContractViolation(tag + ": start equals goal");
}

Environment Environment::translated(const Point& delta) const {
    Environment out = *this;
    out.start += delta;
    out.goal += delta;
    out.laptop_center += delta;
    out.table.min += delta;
    out.table.max += delta;
    return out;
}

Trajectory Trajectory::translated(const Point& delta) const {
    Trajectory out = *this;
    for (auto& w : out.waypoints) w += delta;
    return out;
}

Trajectory straight_line(const Environment& env, std::size_t horizon) {
    if (horizon == 0) throw ContractViolation("horizon must be positive");
    Trajectory traj;
    traj.waypoints.resize(horizon + 1);
    for (std::size_t i = 0; i <= horizon; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(horizon);
        traj.waypoints[i] = (1.0 - s) * env.start + s * env.goal;
    }
    // pin exactly; the interpolation above can round at s = 1
    traj.waypoints.front() = env.start;
    traj.waypoints.back() = env.goal;
    return traj;
}

void validate_trajectory(const Trajectory& traj, const Environment& env, std::size_t horizon) {
    if (traj.size() < 2) throw ContractViolation("trajectory needs at least two waypoints");
    if (horizon != 0 && traj.size() != horizon + 1)
        throw ContractViolation("trajectory has " + std::to_string(traj.size()) + " waypoints, expected " +
                                std::to_string(horizon + 1));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (!in_workspace(traj[i]))
            throw ContractViolation("waypoint " + std::to_string(i) + " " + describe(traj[i]) +
                                    " outside [0,1]^2");
    }
    if (traj.waypoints.front() != env.start)
        throw ContractViolation("first waypoint does not equal the environment start");
    if (traj.waypoints.back() != env.goal)
        throw ContractViolation("last waypoint does not equal the environment goal");
}

FeatureVector step_features(const Point& p, const Environment& env) {
    FeatureVector f(kFeatureCount);
    const double d2 = (p - env.laptop_center).squaredNorm();
    f[kLaptop] = std::exp(-d2 / (2.0 * kLaptopSigma * kLaptopSigma));
    f[kTable] = env.table.contains_strict(p) ? 1.0 : 0.0;
    return f;
}

FeatureVector feature_vector(const Trajectory& traj, const Environment& env) {
    validate_trajectory(traj, env);
    FeatureVector sum = FeatureVector::Zero(kFeatureCount);
    for (const auto& w : traj.waypoints) sum += step_features(w, env);
    return sum / static_cast<double>(traj.size());
}

double reward(const Weights& theta, const Trajectory& traj, const Environment& env) {
    if (theta.size() != kFeatureCount)
        throw ContractViolation("weights have dimension " + std::to_string(theta.size()) + ", features have " +
                                std::to_string(kFeatureCount));
    return theta.dot(feature_vector(traj, env));
}

}  // namespace irlkf
