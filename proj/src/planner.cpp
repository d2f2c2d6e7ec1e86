#include "irlkf/planner.hpp"

#include "irlkf/errors.hpp"
#include "irlkf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <cstdio>
#include <cstdlib>

namespace irlkf {

void PlannerConfig::validate() const {
    if (restarts < 1) throw ContractViolation("planner.restarts must be positive");
    if (max_iterations < 1) throw ContractViolation("planner.max_iterations must be positive");
    if (!(step_size > 0.0)) throw ContractViolation("planner.step_size must be positive");
    if (!(convergence_tol > 0.0)) throw ContractViolation("planner.convergence_tol must be positive");
    if (lattice_resolution < 5) throw ContractViolation("planner.lattice_resolution must be at least 5");
    if (horizon < 1) throw ContractViolation("planner.horizon must be positive");
    if (!(max_step > 0.0)) throw ContractViolation("planner.max_step must be positive");
    if (!(laptop_smoothing_start >= kLaptopSigma))
        throw ContractViolation("planner.laptop_smoothing_start must be at least the laptop width");
    if (!(table_smoothing_start > 0.0) || !(table_smoothing_end > 0.0))
        throw ContractViolation("planner table smoothing widths must be positive");
    if (!(perturbation_scale >= 0.0)) throw ContractViolation("planner.perturbation_scale must be non-negative");
}

namespace {

void check_theta(const Weights& theta) {
    if (theta.size() != kFeatureCount)
        throw ContractViolation("weights have dimension " + std::to_string(theta.size()) + ", expected " +
                                std::to_string(kFeatureCount));
    if (!theta.allFinite()) throw ContractViolation("weights must be finite");
}

/// Direction of theta snapped to a 2^-40 grid, so that positive rescalings
/// of theta produce bit-identical planner inputs.
Weights direction(const Weights& theta) {
    const double scale = theta.cwiseAbs().maxCoeff();
    Weights out = theta / scale;
    for (auto& v : out) v = std::nearbyint(std::ldexp(v, 40)) * std::ldexp(1.0, -40);
    return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Signed distance to the rectangle boundary (positive inside) and its
/// gradient.
std::pair<double, Point> signed_distance(const Rect& r, const Point& p) {
    const double faces[4] = {p.x() - r.min.x(), r.max.x() - p.x(), p.y() - r.min.y(), r.max.y() - p.y()};
    static const Point normals[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    if (faces[0] > 0.0 && faces[1] > 0.0 && faces[2] > 0.0 && faces[3] > 0.0) {
        int k = 0;
        for (int i = 1; i < 4; ++i)
            if (faces[i] < faces[k]) k = i;
        return {faces[k], normals[k]};
    }
    const Point nearest{std::clamp(p.x(), r.min.x(), r.max.x()), std::clamp(p.y(), r.min.y(), r.max.y())};
    const Point away = p - nearest;
    const double d = away.norm();
    if (d == 0.0) {
        int k = 0;
        for (int i = 1; i < 4; ++i)
            if (faces[i] < faces[k]) k = i;
        return {0.0, normals[k]};
    }
    return {-d, -away / d};
}

/// Gradients of the per-waypoint features at p, with the laptop bump
/// widened to `sigma` and the table indicator replaced by
/// sigmoid(signed distance / tau).
std::pair<Point, Point> feature_gradients(const Point& p, const Environment& env, double sigma, double tau) {
    const double inv_var = 1.0 / (sigma * sigma);
    const Point to_laptop = env.laptop_center - p;
    const double g = std::exp(-0.5 * to_laptop.squaredNorm() * inv_var);
    const auto [sd, normal] = signed_distance(env.table, p);
    const double s = sigmoid(sd / tau);
    return {g * inv_var * to_laptop, (s * (1.0 - s) / tau) * normal};
}

void clamp_to_workspace(Point& p) {
    p.x() = std::clamp(p.x(), 0.0, 1.0);
    p.y() = std::clamp(p.y(), 0.0, 1.0);
}

/// Alternating projection onto the segment-length constraints, at most
/// `passes` forward/backward sweeps. Endpoints never move.
void project_feasible(Trajectory& traj, double max_step, int passes = 200) {
    const std::size_t last = traj.size() - 1;
    auto fix_segment = [&](std::size_t i) {
        Point d = traj[i + 1] - traj[i];
        const double len = d.norm();
        if (len <= max_step) return 0.0;
        const double excess = len - max_step;
        d /= len;
        if (i == 0) {
            traj[1] -= excess * d;
        } else if (i + 1 == last) {
            traj[i] += excess * d;
        } else {
            traj[i] += 0.5 * excess * d;
            traj[i + 1] -= 0.5 * excess * d;
        }
        return excess;
    };
    for (int pass = 0; pass < passes; ++pass) {
        double worst = 0.0;
        for (std::size_t i = 0; i < last; ++i) worst = std::max(worst, fix_segment(i));
        for (std::size_t i = last; i-- > 0;) worst = std::max(worst, fix_segment(i));
        if (worst < 1e-9 * max_step) break;
    }
    for (std::size_t i = 1; i < last; ++i) clamp_to_workspace(traj[i]);
    if (passes == 1) return;

    // Leftover violations: blend toward the straight line, whose steps are
    // within the limit whenever the endpoints are reachable at all.
    double longest = 0.0;
    for (std::size_t i = 0; i < last; ++i) longest = std::max(longest, (traj[i + 1] - traj[i]).norm());
    if (longest <= max_step) return;
    const double straight = (traj[last] - traj[0]).norm() / static_cast<double>(last);
    const double lambda = straight < max_step ? std::min(1.0, (longest - max_step * (1.0 - 1e-12)) / (longest - straight)) : 1.0;
    for (std::size_t i = 1; i < last; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(last);
        traj[i] = (1.0 - lambda) * traj[i] + lambda * ((1.0 - u) * traj[0] + u * traj[last]);
    }
}

/// Polyline through `corners`, resampled at equal arc length into
/// `horizon` steps.
Trajectory resample(const Environment& env, const std::vector<Point>& corners, std::size_t horizon) {
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < corners.size(); ++i)
        cumulative.push_back(cumulative.back() + (corners[i] - corners[i - 1]).norm());
    Trajectory traj = straight_line(env, horizon);
    const double total = cumulative.back();
    if (!(total > 0.0)) return traj;
    std::size_t leg = 1;
    for (std::size_t i = 1; i < horizon; ++i) {
        const double s = total * static_cast<double>(i) / static_cast<double>(horizon);
        while (leg + 1 < corners.size() && cumulative[leg] < s) ++leg;
        const double len = cumulative[leg] - cumulative[leg - 1];
        const double u = len > 0.0 ? std::clamp((s - cumulative[leg - 1]) / len, 0.0, 1.0) : 0.0;
        traj[i] = corners[leg - 1] + u * (corners[leg] - corners[leg - 1]);
    }
    return traj;
}

bool segment_hits(const Rect& r, const Point& a, const Point& b) {
    for (int k = 0; k <= 64; ++k)
        if (r.contains_strict(a + (b - a) * (k / 64.0))) return true;
    return false;
}

/// Point of the ellipse {p : |p - f1| + |p - f2| <= budget} closest to
/// `target`, by a sweep over the boundary.
std::optional<Point> closest_in_ellipse(const Point& f1, const Point& f2, double budget, const Point& target) {
    if ((f2 - f1).norm() > budget) return std::nullopt;
    if ((target - f1).norm() + (target - f2).norm() <= budget) return target;
    const Point center = 0.5 * (f1 + f2);
    const double a = 0.5 * budget;
    const double c = 0.5 * (f2 - f1).norm();
    const double b = std::sqrt(std::max(0.0, a * a - c * c));
    const Point u = c > 0.0 ? Point((f2 - f1) / (2.0 * c)) : Point(1.0, 0.0);
    const Point v{-u.y(), u.x()};
    Point best = center;
    for (int k = 0; k < 720; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 720.0;
        const Point p = center + a * std::cos(t) * u + b * std::sin(t) * v;
        if ((p - target).squaredNorm() < (best - target).squaredNorm()) best = p;
    }
    return best;
}

/// Polyline through the point of closest approach to the laptop that the
/// speed limit allows, possibly rounding one or two table corners on the
/// way. Routes that cross the table are skipped when `avoid_table`.
Trajectory laptop_reach(const Environment& env, const PlannerConfig& cfg, bool avoid_table) {
    const double budget = cfg.max_step * static_cast<double>(cfg.horizon) * (1.0 - 1e-9);
    const double margin = 0.02;
    const Rect& t = env.table;
    const Point corners[4] = {{t.min.x() - margin, t.min.y() - margin},
                              {t.max.x() + margin, t.min.y() - margin},
                              {t.max.x() + margin, t.max.y() + margin},
                              {t.min.x() - margin, t.max.y() + margin}};
    std::vector<Point> best_route{env.start, env.goal};
    double best = std::numeric_limits<double>::infinity();
    // route = start, up to two table corners, goal; the via point is
    // inserted at every position
    auto consider = [&](const std::vector<Point>& route) {
        double length = 0.0;
        for (std::size_t i = 1; i < route.size(); ++i) length += (route[i] - route[i - 1]).norm();
        for (std::size_t via = 1; via < route.size(); ++via) {
            const Point& f1 = route[via - 1];
            const Point& f2 = route[via];
            const auto p = closest_in_ellipse(f1, f2, budget - length + (f2 - f1).norm(), env.laptop_center);
            if (!p) continue;
            const double d = (*p - env.laptop_center).norm();
            if (d >= best) continue;
            std::vector<Point> full = route;
            full.insert(full.begin() + static_cast<std::ptrdiff_t>(via), *p);
            bool clear = true;
            if (avoid_table)
                for (std::size_t i = 1; i < full.size() && clear; ++i) clear = !segment_hits(t, full[i - 1], full[i]);
            if (!clear) continue;
            best = d;
            best_route = std::move(full);
        }
    };
    consider({env.start, env.goal});
    for (int i = 0; i < 4; ++i) {
        consider({env.start, corners[i], env.goal});
        for (int j : {(i + 1) % 4, (i + 3) % 4}) consider({env.start, corners[i], corners[j], env.goal});
    }
    return resample(env, best_route, cfg.horizon);
}

Trajectory coarse_seed(const Weights& theta, const Environment& env, const PlannerConfig& cfg, double reach);

/// Restarts 1..kSeeded start from constructed guesses rather than from the
/// straight line.
constexpr int kSeeded = 3;

Trajectory initial_guess(const Weights& theta, const Environment& env, const PlannerConfig& cfg, int restart) {
    if (restart == 0) return straight_line(env, cfg.horizon);
    Trajectory traj;
    if (restart == 1 || restart == 2) {
        traj = coarse_seed(theta, env, cfg, restart == 1 ? 1.0 : std::sqrt(2.0));
    } else if (restart == 3) {
        traj = laptop_reach(env, cfg, theta[kTable] < 0.0);
    } else {
        traj = straight_line(env, cfg.horizon);
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
        const Point dir = (env.goal - env.start).normalized();
        const Point normal{-dir.y(), dir.x()};
        const double bulge = (2.0 * uniform_unit(rng) - 1.0) * cfg.perturbation_scale;
        const double jitter = 0.1 * cfg.perturbation_scale;
        const std::size_t last = traj.size() - 1;
        for (std::size_t i = 1; i < last; ++i) {
            const double s = static_cast<double>(i) / static_cast<double>(last);
            traj[i] += bulge * std::sin(std::numbers::pi * s) * normal;
            traj[i] += jitter * Point{2.0 * uniform_unit(rng) - 1.0, 2.0 * uniform_unit(rng) - 1.0};
        }
    }
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) clamp_to_workspace(traj[i]);
    project_feasible(traj, cfg.max_step);
    return traj;
}

enum class Phase {
    Anneal,  // smoothed features, annealed to the true ones
    Refine,  // true features from a good starting point, shorter steps
};

/// Projected ascent with steps normalized by the largest waypoint gradient,
/// so that vanishing far-field gradients still move the trajectory. The
/// step length is held while the features anneal, then decays
/// geometrically.
Trajectory ascend(const Weights& theta, const Environment& env, const PlannerConfig& cfg, Trajectory traj,
                  Phase phase) {
    const bool anneal = phase == Phase::Anneal;
    const std::size_t last = traj.size() - 1;
    const int anneal_iters = anneal ? std::max(1, (cfg.max_iterations * 3) / 5) : 0;
    const double tau_ratio = cfg.table_smoothing_end / cfg.table_smoothing_start;
    const double sigma_ratio = kLaptopSigma / cfg.laptop_smoothing_start;
    const double first_step = std::min(0.5, 10.0 * cfg.step_size) * cfg.max_step * (anneal ? 1.0 : 0.2);
    const double decay = std::pow(1e-3, 1.0 / std::max(1, cfg.max_iterations - anneal_iters));
    std::vector<Point> grad(traj.size());
    std::vector<Point> before(traj.size());

    double step = first_step;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (it > anneal_iters) step *= decay;
        const double progress = anneal ? std::min(1.0, static_cast<double>(it) / anneal_iters) : 1.0;
        const double tau = cfg.table_smoothing_start * std::pow(tau_ratio, progress);
        const double sigma = cfg.laptop_smoothing_start * std::pow(sigma_ratio, progress);
        double largest = 0.0;
        for (std::size_t i = 1; i < last; ++i) {
            const auto [laptop, table] = feature_gradients(traj[i], env, sigma, tau);
            grad[i] = theta[kLaptop] * laptop + theta[kTable] * table;
            largest = std::max(largest, grad[i].norm());
        }
        if (!(largest > 0.0)) break;
        before = traj.waypoints;
        for (std::size_t i = 1; i < last; ++i) {
            traj[i] += (step / largest) * grad[i];
            clamp_to_workspace(traj[i]);
        }
        project_feasible(traj, cfg.max_step, 1);

        if (it >= anneal_iters) {
            double moved = 0.0;
            for (std::size_t i = 1; i < last; ++i) moved = std::max(moved, (traj[i] - before[i]).norm());
            if (moved < cfg.convergence_tol) break;
        }
    }
    project_feasible(traj, cfg.max_step);
    return traj;
}

}  // namespace

Trajectory optimal_trajectory(const Weights& theta, const Environment& env, const PlannerConfig& cfg) {
    check_theta(theta);
    cfg.validate();
    if (theta.cwiseAbs().maxCoeff() == 0.0) return straight_line(env, cfg.horizon);

    const Weights dir = direction(theta);
    Trajectory best;
    double best_reward = -std::numeric_limits<double>::infinity();
    auto consider = [&](Trajectory candidate) {
        const double value = dir.dot(feature_vector(candidate, env));
        if (best.waypoints.empty() || value > best_reward + 1e-12 * std::abs(best_reward)) {
            best_reward = value;
            best = std::move(candidate);
        }
    };
    for (int r = 0; r < cfg.restarts; ++r) {
        Trajectory start = initial_guess(dir, env, cfg, r);
        consider(start);
        consider(ascend(dir, env, cfg, std::move(start), r >= 1 && r <= kSeeded ? Phase::Refine : Phase::Anneal));
    }
    return best;
}

Lattice::Lattice(const PlannerConfig& cfg)
    : resolution(cfg.lattice_resolution), spacing(1.0 / static_cast<double>(cfg.lattice_resolution - 1)) {
    const double radius = cfg.max_step / spacing * (1.0 + 1e-9);
    const int reach = static_cast<int>(std::floor(radius));
    for (int dj = -reach; dj <= reach; ++dj)
        for (int di = -reach; di <= reach; ++di)
            if (std::hypot(di, dj) <= radius) moves.emplace_back(di, dj);
}

int Lattice::nearest(const Point& p) const {
    const int i = std::clamp(static_cast<int>(std::lround(p.x() / spacing)), 0, resolution - 1);
    const int j = std::clamp(static_cast<int>(std::lround(p.y() / spacing)), 0, resolution - 1);
    return j * resolution + i;
}

Point Lattice::position(int node) const {
    return {(node % resolution) * spacing, (node / resolution) * spacing};
}

namespace {

/// reachable[t][n]: node n can reach the goal node in exactly (T - t) moves.
std::vector<std::vector<char>> goal_reachability(const Lattice& lat, int goal, std::size_t horizon) {
    std::vector<std::vector<char>> reach(horizon + 1, std::vector<char>(lat.node_count(), 0));
    reach[horizon][goal] = 1;
    for (std::size_t t = horizon; t-- > 0;) {
        for (int n = 0; n < lat.node_count(); ++n) {
            const int i = n % lat.resolution, j = n / lat.resolution;
            for (auto [di, dj] : lat.moves) {
                const int ni = i + di, nj = j + dj;
                if (ni < 0 || nj < 0 || ni >= lat.resolution || nj >= lat.resolution) continue;
                if (reach[t + 1][nj * lat.resolution + ni]) {
                    reach[t][n] = 1;
                    break;
                }
            }
        }
    }
    return reach;
}

}  // namespace

LatticePlan lattice_optimal(const Weights& theta, const Environment& env, const PlannerConfig& cfg) {
    check_theta(theta);
    cfg.validate();
    const Lattice lat(cfg);
    const std::size_t T = cfg.horizon;
    const int start = lat.nearest(env.start), goal = lat.nearest(env.goal);
    const int nodes = lat.node_count();
    const double neg_inf = -std::numeric_limits<double>::infinity();

    std::vector<double> node_value(nodes);
    for (int n = 0; n < nodes; ++n) node_value[n] = theta.dot(step_features(lat.position(n), env));

    // value[t][n]: best summed interior reward of waypoints 1..t ending at n.
    std::vector<std::vector<double>> value(T + 1, std::vector<double>(nodes, neg_inf));
    std::vector<std::vector<int>> parent(T + 1, std::vector<int>(nodes, -1));
    value[0][start] = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        for (int n = 0; n < nodes; ++n) {
            if (t == T && n != goal) continue;
            const int i = n % lat.resolution, j = n / lat.resolution;
            double best = neg_inf;
            int arg = -1;
            for (auto [di, dj] : lat.moves) {
                const int pi = i - di, pj = j - dj;
                if (pi < 0 || pj < 0 || pi >= lat.resolution || pj >= lat.resolution) continue;
                const int p = pj * lat.resolution + pi;
                const double v = value[t - 1][p];
                if (v == neg_inf) continue;
                if (v > best || (v == best && p < arg)) {
                    best = v;
                    arg = p;
                }
            }
            if (arg < 0) continue;
            value[t][n] = best + (t < T ? node_value[n] : 0.0);
            parent[t][n] = arg;
        }
    }
    if (value[T][goal] == neg_inf)
        throw Infeasible("lattice of resolution " + std::to_string(lat.resolution) +
                         " cannot connect start and goal of environment " + std::to_string(env.id) + " in " +
                         std::to_string(T) + " steps");

    LatticePlan plan;
    plan.trajectory.waypoints.resize(T + 1);
    int n = goal;
    for (std::size_t t = T; t-- > 1;) {
        n = parent[t + 1][n];
        plan.trajectory[t] = lat.position(n);
    }
    plan.trajectory.waypoints.front() = env.start;
    plan.trajectory.waypoints.back() = env.goal;
    plan.reward = theta.dot(feature_vector(plan.trajectory, env));
    return plan;
}

namespace {

/// Global starting point for restart 1: the exact plan on a lattice with
/// half the resolution and half the steps (each coarse step may span two
/// fine steps), interpolated in time back to the full horizon. Falls back to
/// the straight line when the coarse lattice cannot connect the endpoints.
Trajectory coarse_seed(const Weights& theta, const Environment& env, const PlannerConfig& cfg, double reach) {
    PlannerConfig coarse = cfg;
    coarse.lattice_resolution = std::max(5, (cfg.lattice_resolution - 1) / 2 + 1);
    coarse.horizon = std::max<std::size_t>(1, (cfg.horizon + 1) / 2);
    coarse.max_step = reach * cfg.max_step * static_cast<double>(cfg.horizon) / static_cast<double>(coarse.horizon);
    LatticePlan plan;
    try {
        plan = lattice_optimal(theta, env, coarse);
    } catch (const Infeasible&) {
        return straight_line(env, cfg.horizon);
    }
    Trajectory traj = straight_line(env, cfg.horizon);
    for (std::size_t i = 1; i < cfg.horizon; ++i) {
        const double t = static_cast<double>(i * coarse.horizon) / static_cast<double>(cfg.horizon);
        const std::size_t k = std::min(static_cast<std::size_t>(t), coarse.horizon - 1);
        const double u = t - static_cast<double>(k);
        traj[i] = (1.0 - u) * plan.trajectory[k] + u * plan.trajectory[k + 1];
    }
    return traj;
}

}  // namespace

void enumerate_lattice_paths(const Environment& env, const PlannerConfig& cfg, std::size_t limit,
                             const std::function<void(const Trajectory&)>& visit) {
    cfg.validate();
    const Lattice lat(cfg);
    const std::size_t T = cfg.horizon;
    const int start = lat.nearest(env.start), goal = lat.nearest(env.goal);
    const auto reach = goal_reachability(lat, goal, T);
    if (!reach[0][start])
        throw Infeasible("lattice cannot connect start and goal of environment " + std::to_string(env.id));

    Trajectory path;
    path.waypoints.resize(T + 1);
    path.waypoints.front() = env.start;
    path.waypoints.back() = env.goal;
    std::size_t count = 0;

    std::function<void(std::size_t, int)> extend = [&](std::size_t t, int node) {
        if (t == T) {
            if (++count > limit) throw Unsupported("more than " + std::to_string(limit) + " lattice paths");
            visit(path);
            return;
        }
        const int i = node % lat.resolution, j = node / lat.resolution;
        for (auto [di, dj] : lat.moves) {
            const int ni = i + di, nj = j + dj;
            if (ni < 0 || nj < 0 || ni >= lat.resolution || nj >= lat.resolution) continue;
            const int next = nj * lat.resolution + ni;
            if (!reach[t + 1][next]) continue;
            if (t + 1 < T) path[t + 1] = lat.position(next);
            extend(t + 1, next);
        }
    };
    extend(0, start);
}

}  // namespace irlkf
