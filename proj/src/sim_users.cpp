#include "irlkf/sim_users.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/linalg.hpp"
#include "irlkf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace irlkf {

const char* to_string(UserKind kind) {
    switch (kind) {
        case UserKind::IntendedOptimal: return "intended_optimal";
        case UserKind::NoisyFeature: return "noisy_feature";
        case UserKind::BiasedOneWaypoint: return "biased_one_waypoint";
    }
    return "?";
}

UserKind parse_user_kind(const std::string& text) {
    if (text == "intended_optimal") return UserKind::IntendedOptimal;
    if (text == "noisy_feature") return UserKind::NoisyFeature;
    if (text == "biased_one_waypoint") return UserKind::BiasedOneWaypoint;
    throw ContractViolation("unknown user kind '" + text + "'");
}

void UserModel::validate() const {
    if (true_theta.size() != kFeatureCount || !true_theta.allFinite())
        throw ContractViolation("user true_theta must be finite with dimension " + std::to_string(kFeatureCount));
    if (!(correction_fraction > 0.0 && correction_fraction <= 1.0))
        throw ContractViolation("user correction_fraction must lie in (0, 1]");
    if (kind == UserKind::NoisyFeature &&
        (noise_cov.rows() != kFeatureCount || noise_cov.cols() != kFeatureCount || !is_symmetric_psd(noise_cov, 1e-12)))
        throw ContractViolation("noisy_feature user needs a symmetric PSD noise_cov");
}

namespace {

CorrectionResult biased(const UserModel& user, const Trajectory& robot, const Trajectory& intended) {
    CorrectionResult out{robot, std::nullopt, std::nullopt, 0.0};
    double worst = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 1; i + 1 < robot.size(); ++i) {
        const double err = (robot[i] - intended[i]).norm();
        if (err > worst) {
            worst = err;
            arg = i;
        }
    }
    if (worst == 0.0) return out;
    out.trajectory[arg] = robot[arg] + user.correction_fraction * (intended[arg] - robot[arg]);
    out.moved_waypoint = arg;
    return out;
}

/// Best-effort trajectory whose features approach `target`: gradient descent
/// on |phi - target|^2 from the intended trajectory, table indicator
/// smoothed, keeping the best exact-feature iterate.
CorrectionResult noisy(const Environment& env, const Trajectory& intended, const FeatureVector& target,
                       const PlannerConfig& cfg) {
    const double inv_var = 1.0 / (kLaptopSigma * kLaptopSigma);
    const double tau = cfg.table_smoothing_end;
    const std::size_t last = intended.size() - 1;
    const double n = static_cast<double>(intended.size());
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

    Trajectory traj = intended;
    Trajectory best = traj;
    double best_residual = (feature_vector(traj, env) - target).norm();
    for (int it = 0; it < cfg.max_iterations && best_residual > 1e-9; ++it) {
        const FeatureVector err = feature_vector(traj, env) - target;
        for (std::size_t i = 1; i < last; ++i) {
            const Point p = traj[i];
            const Point to_laptop = env.laptop_center - p;
            const double g = std::exp(-0.5 * to_laptop.squaredNorm() * inv_var);
            const Point d_laptop = g * inv_var * to_laptop / n;
            const Rect& t = env.table;
            const double ax = sig((p.x() - t.min.x()) / tau), bx = sig((t.max.x() - p.x()) / tau);
            const double ay = sig((p.y() - t.min.y()) / tau), by = sig((t.max.y() - p.y()) / tau);
            const double soft = ax * bx * ay * by;
            const Point d_table =
                Point{soft * (bx - ax) / tau, soft * (by - ay) / tau} / n;
            Point step = -cfg.step_size * n * (err[kLaptop] * d_laptop + err[kTable] * d_table);
            const double len = step.norm();
            if (len > 0.5 * cfg.max_step) step *= 0.5 * cfg.max_step / len;
            traj[i] += step;
            traj[i].x() = std::clamp(traj[i].x(), 0.0, 1.0);
            traj[i].y() = std::clamp(traj[i].y(), 0.0, 1.0);
        }
        const double residual = (feature_vector(traj, env) - target).norm();
        if (residual < best_residual) {
            best_residual = residual;
            best = traj;
        }
    }
    CorrectionResult out{best, std::nullopt, target, best_residual};
    return out;
}

}  // namespace

CorrectionResult correct(const UserModel& user, const Environment& env, const Trajectory& robot,
                         const PlannerConfig& planner_cfg, std::uint64_t draw_index, const Trajectory* intended) {
    user.validate();
    validate_trajectory(robot, env, planner_cfg.horizon);
    Trajectory planned;
    if (intended == nullptr) {
        planned = optimal_trajectory(user.true_theta, env, planner_cfg);
        intended = &planned;
    }
    switch (user.kind) {
        case UserKind::IntendedOptimal:
            return {*intended, std::nullopt, std::nullopt, 0.0};
        case UserKind::BiasedOneWaypoint:
            return biased(user, robot, *intended);
        case UserKind::NoisyFeature: {
            Rng rng(derive_seed(user.seed, draw_index));
            std::normal_distribution<double> normal(0.0, 1.0);
            FeatureVector z(kFeatureCount);
            for (auto& v : z) v = normal(rng);
            const Mat root = symmetric_sqrt(user.noise_cov, "user noise covariance");
            const FeatureVector target = feature_vector(*intended, env) + root * z;
            return noisy(env, *intended, target, planner_cfg);
        }
    }
    throw ContractViolation("unknown user kind");
}

}  // namespace irlkf
