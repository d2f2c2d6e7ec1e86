#pragma once

#include "irlkf/geometry.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace irlkf {

struct PlannerConfig {
    int restarts = 8;
    int max_iterations = 200;
    double step_size = 0.05;
    double convergence_tol = 1e-6;
    /// Lattice nodes per axis for the DP oracle.
    int lattice_resolution = 25;
    std::uint64_t seed = 0;

    /// T: a trajectory has horizon + 1 waypoints.
    std::size_t horizon = 20;
    /// Speed limit: longest allowed segment between consecutive waypoints.
    /// The default is one cell of the 25-node lattice, so lattice paths
    /// move along the axes and every lattice path is a feasible continuous
    /// trajectory.
    double max_step = 1.0 / 24.0;
    /// Continuation: the ascent starts on smoothed features and anneals them
    /// geometrically over the first 60% of iterations. The laptop bump
    /// widens to this sigma and shrinks to the true width...
    double laptop_smoothing_start = 0.3;
    /// ...and the table indicator becomes a sigmoid product whose width
    /// goes from start to end.
    double table_smoothing_start = 0.15;
    double table_smoothing_end = 0.005;
    /// Largest lateral bulge (workspace units) of a random restart.
    double perturbation_scale = 0.15;

    void validate() const;
};

/// Maximizes theta . phi(xi, env) over trajectories with pinned endpoints
/// and segments no longer than max_step. Multi-start projected gradient
/// ascent: restart 0 is the straight line and wins ties; restarts 1 and 2
/// start from exact plans on a coarse lattice (half the resolution, half
/// the steps; axis moves, then diagonal moves too); restart 3 from the
/// closest approach to the laptop the speed limit allows; the rest from
/// seeded random bulges. Every starting point is itself a candidate. The result only depends on the direction of theta.
Trajectory optimal_trajectory(const Weights& theta, const Environment& env, const PlannerConfig& cfg);

struct LatticePlan {
    Trajectory trajectory;
    double reward = 0.0;
};

/// Lattice geometry shared by the DP and the exhaustive enumerators.
struct Lattice {
    int resolution = 0;
    double spacing = 0.0;
    /// Node offsets (di, dj) reachable in one step, including staying put.
    std::vector<std::pair<int, int>> moves;

    explicit Lattice(const PlannerConfig& cfg);

    int node_count() const { return resolution * resolution; }
    int nearest(const Point& p) const;
    Point position(int node) const;
};

/// Exact maximizer over lattice paths of `horizon` steps: waypoint 0 is the
/// environment start, waypoint T the goal, interior waypoints are lattice
/// nodes and consecutive nodes differ by an allowed move. Ties go to the
/// lowest node index. Throws Infeasible if the goal node is out of reach.
LatticePlan lattice_optimal(const Weights& theta, const Environment& env, const PlannerConfig& cfg);

/// Visits every lattice path (same path set as lattice_optimal). Throws
/// Unsupported when more than `limit` paths exist.
void enumerate_lattice_paths(const Environment& env, const PlannerConfig& cfg, std::size_t limit,
                             const std::function<void(const Trajectory&)>& visit);

}  // namespace irlkf
