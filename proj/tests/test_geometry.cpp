#include "support.hpp"

#include "irlkf/errors.hpp"

#include <doctest.h>

using namespace irlkf;
using namespace irlkf::test;

TEST_SUITE("geometry") {

TEST_CASE("straight lines through the catalog match the scalar feature oracle") {
    for (const auto& env : build_catalog()) {
        const Trajectory line = straight_line(env, 20);
        const FeatureVector phi = feature_vector(line, env);
        const auto oracle = scalar_features(line, env);
        CHECK(phi[kLaptop] == doctest::Approx(oracle[0]).epsilon(1e-14));
        CHECK(phi[kTable] == doctest::Approx(oracle[1]).epsilon(1e-14));
    }
}

TEST_CASE("far laptop and clear table give near-zero features") {
    Environment env;
    env.start = {0.1, 0.1};
    env.goal = {0.9, 0.1};
    env.laptop_center = {0.5, 0.9};
    env.table = Rect{{0.4, 0.5}, {0.6, 0.7}};
    const FeatureVector phi = feature_vector(straight_line(env, 20), env);
    CHECK(phi[kTable] == 0.0);
    CHECK(phi[kLaptop] < 0.05);
}

TEST_CASE("a trajectory entirely inside the table has table feature one") {
    Environment env;
    env.start = {0.3, 0.3};
    env.goal = {0.7, 0.7};
    env.table = Rect{{0.2, 0.2}, {0.8, 0.8}};
    CHECK(feature_vector(straight_line(env, 20), env)[kTable] == 1.0);
}

TEST_CASE("the table indicator is strict on the boundary") {
    Rect r{{0.2, 0.2}, {0.4, 0.4}};
    CHECK(r.contains_strict({0.3, 0.3}));
    CHECK_FALSE(r.contains_strict({0.2, 0.3}));
    CHECK_FALSE(r.contains_strict({0.3, 0.4}));
}

TEST_CASE("reward examples") {
    const Environment env = build_catalog()[0];
    const Trajectory line = straight_line(env, 20);
    CHECK(reward(vec2(0, 0), line, env) == 0.0);

    const FeatureVector phi = vec2(0.8, 0.1);
    CHECK(vec2(1, -1).dot(phi) == doctest::Approx(0.7).epsilon(1e-15));

    Environment far;
    far.start = {0.1, 0.1};
    far.goal = {0.9, 0.1};
    far.laptop_center = {0.5, 0.9};
    far.table = Rect{{0.4, 0.5}, {0.6, 0.7}};
    Environment near = far;
    near.laptop_center = {0.5, 0.1};
    near.start = {0.49, 0.1};
    near.goal = {0.51, 0.1};
    const double avoid = reward(vec2(1, -1), straight_line(far, 20), far);
    const double close = reward(vec2(1, -1), straight_line(near, 20), near);
    CHECK(avoid == doctest::Approx(0.0).epsilon(0.01));
    CHECK(feature_vector(straight_line(near, 20), near)[kLaptop] > 0.95);
    CHECK(avoid < close);
}

TEST_CASE("reward rejects a weight vector of the wrong dimension") {
    const Environment env = build_catalog()[0];
    Weights theta(3);
    theta << 1, 0, 0;
    CHECK_THROWS_AS(reward(theta, straight_line(env, 20), env), ContractViolation);
}

TEST_CASE("features are invariant under joint translation") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Environment env;
        env.start = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
        env.goal = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
        env.laptop_center = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
        const double x0 = uniform(rng, 0.2, 0.6), y0 = uniform(rng, 0.2, 0.6);
        env.table = Rect{{x0, y0}, {x0 + 0.15, y0 + 0.15}};
        Trajectory traj = straight_line(env, 20);
        for (std::size_t i = 1; i < 20; ++i) traj[i] = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
        const Point delta{uniform(rng, -0.15, 0.15), uniform(rng, -0.15, 0.15)};
        const FeatureVector a = feature_vector(traj, env);
        const FeatureVector b = feature_vector(traj.translated(delta), env.translated(delta));
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("reward is linear in the weights") {
    Rng rng(12);
    const auto catalog = build_catalog();
    for (int trial = 0; trial < 200; ++trial) {
        const Environment& env = catalog[uniform_index(rng, catalog.size())];
        const Trajectory traj = random_trajectory(rng, env, 20);
        const Weights t1 = random_matrix(rng, 2, 1, 3.0), t2 = random_matrix(rng, 2, 1, 3.0);
        const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
        const double lhs = reward(a * t1 + b * t2, traj, env);
        const double rhs = a * reward(t1, traj, env) + b * reward(t2, traj, env);
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("feature components stay in the unit interval") {
    Rng rng(13);
    for (const auto& env : build_catalog())
        for (int trial = 0; trial < 1000; ++trial) {
            const FeatureVector phi = feature_vector(random_trajectory(rng, env, 20), env);
            REQUIRE(phi.minCoeff() >= 0.0);
            REQUIRE(phi.maxCoeff() <= 1.0);
        }
}

TEST_CASE("trajectory validation") {
    const Environment env = build_catalog()[0];
    Trajectory t = straight_line(env, 20);
    CHECK_NOTHROW(validate_trajectory(t, env, 20));
    CHECK_THROWS_AS(validate_trajectory(t, env, 10), ContractViolation);
    Trajectory moved = t;
    moved[0] += Point{0.01, 0.0};
    CHECK_THROWS_AS(validate_trajectory(moved, env, 20), ContractViolation);
    Trajectory outside = t;
    outside[5] = {1.2, 0.5};
    CHECK_THROWS_AS(validate_trajectory(outside, env, 20), ContractViolation);
    Trajectory nan = t;
    nan[5] = {std::nan(""), 0.5};
    CHECK_THROWS_AS(validate_trajectory(nan, env, 20), ContractViolation);
}

TEST_CASE("environment validation") {
    Environment env = build_catalog()[0];
    env.goal = env.start;
    CHECK_THROWS_AS(env.validate(), ContractViolation);
    env = build_catalog()[0];
    env.table.max = env.table.min;
    CHECK_THROWS_AS(env.validate(), ContractViolation);
}

}
