#pragma once

#include "irlkf/geometry.hpp"
#include "irlkf/planner.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace irlkf {

enum class UserKind { IntendedOptimal, NoisyFeature, BiasedOneWaypoint };

const char* to_string(UserKind kind);
UserKind parse_user_kind(const std::string& text);

struct UserModel {
    UserKind kind = UserKind::BiasedOneWaypoint;
    Weights true_theta;
    /// Feature-noise covariance for NoisyFeature users.
    Mat noise_cov;
    /// beta: fraction of the way the corrected waypoint moves toward the
    /// intended one. 1.0 snaps it fully.
    double correction_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CorrectionResult {
    Trajectory trajectory;
    /// Interior waypoint moved by a biased user, if any.
    std::optional<std::size_t> moved_waypoint;
    /// NoisyFeature only: target phi(xi*) + n and |phi(returned) - target|.
    std::optional<FeatureVector> target_features;
    double residual = 0.0;
};

/// Simulated correction of `robot` in `env`. `intended` is
/// optimal_trajectory(user.true_theta, env, planner_cfg); pass it to skip
/// replanning. Noise draws depend only on (user.seed, draw_index).
CorrectionResult correct(const UserModel& user, const Environment& env, const Trajectory& robot,
                         const PlannerConfig& planner_cfg, std::uint64_t draw_index = 0,
                         const Trajectory* intended = nullptr);

}  // namespace irlkf
