#pragma once

#include "irlkf/catalog.hpp"
#include "irlkf/geometry.hpp"
#include "irlkf/learners.hpp"
#include "irlkf/planner.hpp"
#include "irlkf/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace irlkf::test {

inline Weights vec2(double a, double b) {
    Weights w(2);
    w << a, b;
    return w;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

inline Mat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, -scale, scale);
    return m;
}

/// A A^T + floor I.
inline Mat random_spd(Rng& rng, Eigen::Index k, double scale = 1.0, double floor = 0.0) {
    const Mat a = random_matrix(rng, k, k, scale);
    return a * a.transpose() + floor * Mat::Identity(k, k);
}

inline double min_eigenvalue(const Mat& p) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (p + p.transpose()));
    return es.eigenvalues().minCoeff();
}

inline double max_abs_diff(const Trajectory& a, const Trajectory& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return d;
}

/// Scalar re-implementation of the two features, no Eigen on the hot path.
inline std::vector<double> scalar_features(const Trajectory& traj, const Environment& env) {
    double laptop = 0.0, table = 0.0;
    for (const auto& p : traj.waypoints) {
        const double dx = p.x() - env.laptop_center.x(), dy = p.y() - env.laptop_center.y();
        laptop += std::exp(-(dx * dx + dy * dy) / (2.0 * 0.1 * 0.1));
        const bool inside = p.x() > env.table.min.x() && p.x() < env.table.max.x() && p.y() > env.table.min.y() &&
                            p.y() < env.table.max.y();
        if (inside) table += 1.0;
    }
    const double n = static_cast<double>(traj.size());
    return {laptop / n, table / n};
}

/// Random interior waypoints anywhere in the workspace.
inline Trajectory random_trajectory(Rng& rng, const Environment& env, std::size_t horizon) {
    Trajectory t = straight_line(env, horizon);
    for (std::size_t i = 1; i < horizon; ++i) t[i] = Point{uniform_unit(rng), uniform_unit(rng)};
    return t;
}

/// Information-form Kalman posterior for z = H theta + n.
struct LinearPosterior {
    Vec mean;
    Mat covariance;
};

inline LinearPosterior linear_kalman(const Vec& mean, const Mat& p, const Mat& m, const Mat& h, const Mat& n,
                                     const Vec& innovation) {
    const Mat prior = p + m;
    const Mat n_inv = n.inverse();
    const Mat post = (prior.inverse() + h.transpose() * n_inv * h).inverse();
    const Mat gain = post * h.transpose() * n_inv;
    return {mean + gain * innovation, post};
}

/// 5x5 lattice with T=4 where every step may move one cell along an axis
/// or diagonal. Start and goal sit on lattice nodes.
inline PlannerConfig small_lattice_config() {
    PlannerConfig cfg;
    cfg.lattice_resolution = 5;
    cfg.horizon = 4;
    cfg.max_step = 0.25 * std::sqrt(2.0);
    return cfg;
}

inline Environment random_small_environment(Rng& rng, int id) {
    auto node = [&rng] { return 0.25 * static_cast<double>(uniform_index(rng, 5)); };
    Environment env;
    env.id = id;
    do {
        env.start = {node(), node()};
        env.goal = {node(), node()};
    } while (env.start == env.goal || (env.goal - env.start).cwiseAbs().maxCoeff() > 1.0);
    env.laptop_center = {uniform_unit(rng), uniform_unit(rng)};
    const double x0 = uniform(rng, 0.0, 0.7), y0 = uniform(rng, 0.0, 0.7);
    env.table = Rect{{x0, y0}, {x0 + uniform(rng, 0.1, 0.3), y0 + uniform(rng, 0.1, 0.3)}};
    return env;
}

}  // namespace irlkf::test
