#include "support.hpp"

#include "irlkf/service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace irlkf;
using namespace irlkf::test;

namespace {

AppConfig service_config() {
    AppConfig cfg;
    cfg.experiment.filter = KalmanVariant::Ukf;
    cfg.experiment.learner.sigma_alpha = 1.0;
    cfg.experiment.planner.restarts = 4;
    cfg.experiment.user.kind = UserKind::BiasedOneWaypoint;
    cfg.experiment.user.true_theta = vec2(1, -1);
    cfg.experiment.user.correction_fraction = 1.0;
    return cfg;
}

int error_status(const std::function<void()>& fn, std::string* code = nullptr,
                 std::vector<std::string>* details = nullptr) {
    try {
        fn();
    } catch (const ServiceError& e) {
        if (code) *code = e.code();
        if (details) *details = e.details();
        return e.status();
    }
    return 0;
}

Trajectory user_correction(const SessionState& s, const AppConfig& cfg, int iteration) {
    UserModel user = cfg.experiment.user;
    const Trajectory intended = optimal_trajectory(user.true_theta, s.env, cfg.experiment.planner);
    return correct(user, s.env, s.trajectory, cfg.experiment.planner, static_cast<std::uint64_t>(iteration), &intended)
        .trajectory;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("create and get return the same session") {
    SessionStore store(service_config(), build_catalog());
    const json created = store.create({{"learner", "EKF"}, {"env_id", 4}});
    const json fetched = store.get(created["id"]);
    CHECK(created == fetched);
    CHECK(created["iteration"] == 0);
    CHECK(created["env"]["id"] == 4);
    CHECK(created["estimate"]["covariance"].is_array());
    CHECK(created["estimate"]["ellipses"].size() == 1);
    CHECK(store.size() == 1);
    const Trajectory t = trajectory_from_json(created["trajectory"]);
    CHECK(t == optimal_trajectory(vec2(0, 0), build_catalog().find(4), store.config().experiment.planner));
}

TEST_CASE("a perceptron session does not track covariance") {
    SessionStore store(service_config(), build_catalog());
    const json s = store.create({{"learner", "PP"}, {"env_id", 0}});
    CHECK(s["estimate"]["covariance"] == "not tracked");
    CHECK(s["estimate"]["ellipses"].empty());
}

TEST_CASE("an active-learning session starts in the selector's environment") {
    const AppConfig cfg = service_config();
    const auto catalog = build_catalog();
    SessionStore store(cfg, catalog);
    const json s = store.create({{"learner", "UKF"}, {"active_learning", true}});
    const auto pick = select_environment(cfg.experiment.initial, catalog, cfg.experiment.learner,
                                         cfg.experiment.planner, cfg.experiment.selection);
    CHECK(s["env"]["id"] == pick.env.id);
}

TEST_CASE("resubmitting the robot trajectory keeps the mean and updates the covariance") {
    SessionStore store(service_config(), build_catalog());
    const json s = store.create({{"learner", "EKF"}, {"env_id", 7}, {"initial_mean", {0.4, -0.6}}});
    const json after = store.submit(s["id"], {{"trajectory", s["trajectory"]}});
    CHECK(after["estimate"]["mean"] == s["estimate"]["mean"]);
    CHECK(after["estimate"]["covariance"] != s["estimate"]["covariance"]);
    CHECK(after["iteration"] == 1);
    CHECK(after.contains("last_gain"));
}

TEST_CASE("pushing the trajectory across the table raises the table weight") {
    const AppConfig cfg = service_config();
    const auto catalog = build_catalog();
    SessionStore store(cfg, catalog);
    const PlannerConfig& planner = cfg.experiment.planner;
    for (const auto& env : catalog) {
        const Trajectory robot = optimal_trajectory(vec2(0, 0), env, planner);
        Trajectory corrected = robot;
        bool moved = false;
        for (std::size_t i = 1; i + 1 < corrected.size() && !moved; ++i) {
            const Point c = 0.5 * (env.table.min + env.table.max);
            if ((corrected[i] - c).norm() <= 2 * planner.max_step) {
                corrected[i] = c;
                moved = feature_vector(corrected, env)[kTable] > feature_vector(robot, env)[kTable];
                if (!moved) corrected[i] = robot[i];
            }
        }
        if (!moved) continue;
        const json s = store.create({{"learner", "EKF"}, {"env_id", env.id}});
        const json after = store.submit(s["id"], {{"trajectory", trajectory_to_json(corrected)}});
        const Vec mean = vector_from_json(after["estimate"]["mean"]);
        MESSAGE("env " << env.id << " mean after the correction " << mean.transpose());
        CHECK(mean[kTable] > 0.0);
        return;
    }
    FAIL("no environment admits a one-waypoint push onto the table");
}

TEST_CASE("a session replays the harness bit for bit") {
    AppConfig cfg = service_config();
    cfg.experiment.iterations = 15;
    cfg.experiment.repetitions = 1;
    const auto catalog = build_catalog();
    ExperimentConfig exp = cfg.experiment;
    exp.arm = Arm::KF;
    const ExperimentResult harness = run_experiment(exp, catalog);
    REQUIRE(harness.records.size() == 15);

    SessionStore store(cfg, catalog);
    const std::uint64_t seed = repetition_seed(cfg.experiment.master_seed, 0);
    const std::string id = store.create({{"learner", "UKF"}, {"seed", seed}})["id"];
    for (int t = 1; t <= 15; ++t) {
        const SessionState s = store.state(id);
        CHECK(s.env.id == harness.records[static_cast<std::size_t>(t - 1)].env_id);
        store.submit(id, {{"trajectory", trajectory_to_json(user_correction(s, cfg, t))}});
        const SessionState after = store.state(id);
        CHECK(after.estimate.mean == harness.records[static_cast<std::size_t>(t - 1)].mean);
        CHECK(after.estimate.covariance == harness.records[static_cast<std::size_t>(t - 1)].covariance);
    }
    const PreferenceEstimate replayed = store.replay(id);
    CHECK(replayed.mean == store.state(id).estimate.mean);
    CHECK(replayed.covariance == store.state(id).estimate.covariance);
}

TEST_CASE("invalid corrections are rejected with details") {
    SessionStore store(service_config(), build_catalog());
    const json s = store.create({{"learner", "UKF"}, {"env_id", 2}});
    Trajectory t = trajectory_from_json(s["trajectory"]);
    t[5] = Point(1.5, 0.5);
    t[0] = Point(0.0, 0.0);
    std::string code;
    std::vector<std::string> details;
    CHECK(error_status([&] { store.submit(s["id"], {{"trajectory", trajectory_to_json(t)}}); }, &code, &details) ==
          400);
    CHECK(code == "validation_error");
    CHECK(details.size() >= 2);
    CHECK(store.get(s["id"])["iteration"] == 0);

    CHECK(error_status([&] { store.submit(s["id"], {{"path", json::array()}}); }) == 400);
    CHECK(error_status([&] { store.submit(s["id"], {{"trajectory", {{0.1, 0.2}}}}); }) == 400);
    CHECK(error_status([&] { store.create({{"learner", "SVM"}}); }) == 400);
    CHECK(error_status([&] { store.create({{"initial_mean", {1, 2, 3}}}); }) == 400);
    CHECK(error_status([&] { store.create({{"env_id", 2}, {"active_learning", true}}); }) == 400);
    CHECK(error_status([&] { store.create({{"learner", "PP"}, {"learning_rate", -1}}); }) == 400);
}

TEST_CASE("unknown sessions and environments are 404") {
    SessionStore store(service_config(), build_catalog());
    CHECK(error_status([&] { store.get("missing"); }) == 404);
    CHECK(error_status([&] { store.submit("missing", json::object()); }) == 404);
    CHECK(error_status([&] { store.create({{"env_id", 99}}); }) == 404);
    CHECK(store.size() == 0);
}

TEST_CASE("concurrent submissions to one session conflict") {
    SessionStore store(service_config(), build_catalog());
    const json s = store.create({{"learner", "UKF"}, {"env_id", 9}});
    const std::string id = s["id"];
    int conflicts = 0, applied = 0;
    for (int attempt = 0; attempt < 20 && conflicts == 0; ++attempt) {
        const json body = {{"trajectory", store.get(id)["trajectory"]}};
        std::atomic<int> ok{0}, busy{0};
        auto go = [&] {
            const int st = error_status([&] { store.submit(id, body); });
            (st == 0 ? ok : busy) += st == 0 || st == 409;
        };
        std::thread a(go), b(go);
        a.join();
        b.join();
        CHECK(ok + busy == 2);
        conflicts += busy;
        applied += ok;
    }
    MESSAGE(conflicts << " conflicts, " << applied << " applied");
    CHECK(conflicts >= 1);
    CHECK(store.get(id)["iteration"] == applied);
}

TEST_CASE("risk-sensitive plans from a session") {
    SessionStore store(service_config(), build_catalog());
    const json neutral_pp = store.create({{"learner", "PP"}, {"env_id", 12}, {"initial_mean", {1, -1}}});
    const json a = store.plan(neutral_pp["id"], "averse", "", "");
    const json n = store.plan(neutral_pp["id"], "neutral", "", "");
    CHECK(a["trajectory"] == n["trajectory"]);

    const json uncertain = store.create({{"learner", "UKF"},
                                         {"env_id", 12},
                                         {"initial_mean", {1, -1}},
                                         {"initial_covariance", {{0.01, 0}, {0, 1}}}});
    const double averse = store.plan(uncertain["id"], "averse", "reversed", "")["features"][kTable];
    const double neutral = store.plan(uncertain["id"], "neutral", "", "")["features"][kTable];
    CHECK(averse <= neutral);
    CHECK(error_status([&] { store.plan(uncertain["id"], "averse", "nested", "continuous"); }) == 422);
    CHECK(error_status([&] { store.plan(uncertain["id"], "bold", "", ""); }) == 400);
}

TEST_CASE("two sessions with the same inputs evolve identically") {
    const AppConfig cfg = service_config();
    SessionStore store(cfg, build_catalog());
    const json body = {{"learner", "UKF"}, {"seed", 21}};
    const std::string a = store.create(body)["id"], b = store.create(body)["id"];
    CHECK(a != b);
    for (int t = 1; t <= 3; ++t) {
        const Trajectory corr = user_correction(store.state(a), cfg, t);
        store.submit(a, {{"trajectory", trajectory_to_json(corr)}});
        store.submit(b, {{"trajectory", trajectory_to_json(corr)}});
        json ja = store.get(a), jb = store.get(b);
        ja.erase("id");
        jb.erase("id");
        CHECK(ja == jb);
    }
}

TEST_CASE("a journaled store recovers its sessions") {
    const auto dir = std::filesystem::temp_directory_path() / "irlkf_test_journal";
    std::filesystem::remove_all(dir);
    const AppConfig cfg = service_config();
    std::string id;
    json before;
    {
        SessionStore store(cfg, build_catalog(), dir);
        id = store.create({{"learner", "EKF"}, {"seed", 5}})["id"];
        store.submit(id, {{"trajectory", trajectory_to_json(user_correction(store.state(id), cfg, 1))}});
        before = store.get(id);
    }
    SessionStore reopened(cfg, build_catalog(), dir);
    CHECK(reopened.get(id) == before);
    CHECK(reopened.create({{"learner", "PP"}})["id"] != id);
}

TEST_CASE("covariance ellipses") {
    Mat p(2, 2);
    p << 4, 0, 0, 1;
    const json e = covariance_ellipses(p);
    REQUIRE(e.size() == 1);
    CHECK(e[0]["semi_axes"][0].get<double>() == doctest::Approx(1.0));
    CHECK(e[0]["semi_axes"][1].get<double>() == doctest::Approx(2.0));
    CHECK(covariance_ellipses(Mat::Identity(3, 3)).size() == 3);
}

TEST_CASE("the HTTP API") {
    SessionStore store(service_config(), build_catalog());
    httplib::Server server;
    install_routes(server, store);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");

    auto envs = client.Get("/environments");
    REQUIRE(envs);
    CHECK(json::parse(envs->body)["environments"].size() == 48);

    auto created = client.Post("/sessions", R"({"learner": "EKF", "env_id": 3})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const json s = json::parse(created->body);
    const std::string id = s["id"];

    auto fetched = client.Get("/sessions/" + id);
    REQUIRE(fetched);
    CHECK(fetched->status == 200);
    CHECK(json::parse(fetched->body) == s);

    const json same = {{"trajectory", s["trajectory"]}};
    auto submitted = client.Post("/sessions/" + id + "/corrections", same.dump(), "application/json");
    REQUIRE(submitted);
    CHECK(submitted->status == 200);
    CHECK(json::parse(submitted->body)["iteration"] == 1);

    auto bad = client.Post("/sessions/" + id + "/corrections", R"({"trajectory": [[0, 0], [2, 2]]})",
                           "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["code"] == "validation_error");

    auto garbage = client.Post("/sessions", "{nope", "application/json");
    REQUIRE(garbage);
    CHECK(garbage->status == 400);

    auto plan = client.Get("/sessions/" + id + "/plan?mode=averse");
    REQUIRE(plan);
    CHECK(plan->status == 200);
    CHECK(json::parse(plan->body)["mode"] == "averse");
    auto no_mode = client.Get("/sessions/" + id + "/plan");
    REQUIRE(no_mode);
    CHECK(no_mode->status == 400);

    auto missing = client.Get("/sessions/nope");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["code"] == "not_found");
    auto no_route = client.Get("/teapot");
    REQUIRE(no_route);
    CHECK(no_route->status == 404);

    server.stop();
    listener.join();
}

}
