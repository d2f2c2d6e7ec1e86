#include "irlkf/service.hpp"

#include "irlkf/active_learning.hpp"
#include "irlkf/errors.hpp"
#include "irlkf/rng.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace irlkf {

const char* to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::PP: return "PP";
        case LearnerKind::EKF: return "EKF";
        case LearnerKind::UKF: return "UKF";
    }
    return "?";
}

LearnerKind parse_learner_kind(const std::string& text) {
    if (text == "PP" || text == "pp") return LearnerKind::PP;
    if (text == "EKF" || text == "ekf") return LearnerKind::EKF;
    if (text == "UKF" || text == "ukf") return LearnerKind::UKF;
    throw ContractViolation("unknown learner '" + text + "' (expected PP, EKF or UKF)");
}

ServiceError::ServiceError(int status, std::string code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}

json ServiceError::body() const { return {{"code", code_}, {"message", what()}, {"details", details_}}; }

ServiceError to_service_error(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::ContractViolation: return {400, "invalid_request", e.what()};
        case ErrorKind::NotFound: return {404, "not_found", e.what()};
        case ErrorKind::Conflict: return {409, "conflict", e.what()};
        case ErrorKind::Unsupported: return {422, "unsupported", e.what()};
        case ErrorKind::Infeasible: return {422, "infeasible", e.what()};
        case ErrorKind::NumericalDegeneracy: return {422, "numerical_degeneracy", e.what()};
    }
    return {500, "internal", e.what()};
}

namespace {

ServiceError bad_request(const std::string& message, std::vector<std::string> details = {}) {
    return {400, "invalid_request", message, std::move(details)};
}

template <typename T>
T field_or(const json& body, const char* key, T fallback) {
    if (!body.contains(key) || body[key].is_null()) return fallback;
    try {
        return body[key].get<T>();
    } catch (const json::exception&) {
        throw bad_request(std::string("field '") + key + "' has the wrong type");
    }
}

/// Every problem with a human-supplied trajectory, one detail per waypoint.
std::vector<std::string> trajectory_problems(const Trajectory& traj, const Environment& env, std::size_t horizon) {
    std::vector<std::string> out;
    if (traj.size() != horizon + 1) {
        out.push_back("expected " + std::to_string(horizon + 1) + " waypoints, got " + std::to_string(traj.size()));
        return out;
    }
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Point& p = traj[i];
        if (!p.allFinite() || !in_workspace(p))
            out.push_back("waypoint " + std::to_string(i) + " lies outside the workspace [0,1]^2");
    }
    if (traj[0] != env.start) out.push_back("waypoint 0 must equal the start");
    if (traj[horizon] != env.goal) out.push_back("waypoint " + std::to_string(horizon) + " must equal the goal");
    return out;
}

json estimate_json(const PreferenceEstimate& est) {
    json out;
    out["mean"] = vector_to_json(est.mean);
    if (est.covariance_tracked) {
        out["covariance"] = matrix_to_json(est.covariance);
        out["ellipses"] = covariance_ellipses(est.covariance);
    } else {
        out["covariance"] = "not tracked";
        out["ellipses"] = json::array();
    }
    return out;
}

}  // namespace

json covariance_ellipses(const Mat& p) {
    json out = json::array();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = i + 1; j < p.rows(); ++j) {
            Eigen::Matrix2d m;
            m << p(i, i), p(i, j), p(j, i), p(j, j);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (m + m.transpose()));
            const Eigen::Vector2d vals = es.eigenvalues();
            const Eigen::Matrix2d vecs = es.eigenvectors();
            out.push_back({{"features", {i, j}},
                           {"eigenvalues", {vals(0), vals(1)}},
                           {"eigenvectors", {{vecs(0, 0), vecs(1, 0)}, {vecs(0, 1), vecs(1, 1)}}},
                           {"semi_axes", {std::sqrt(std::max(0.0, vals(0))), std::sqrt(std::max(0.0, vals(1)))}},
                           {"angle", std::atan2(vecs(1, 1), vecs(0, 1))}});
        }
    return out;
}

SessionRequest SessionRequest::from_json(const json& body, const AppConfig& defaults) {
    if (!body.is_object()) throw bad_request("request body must be a JSON object");
    SessionRequest r;
    try {
        r.learner = parse_learner_kind(field_or<std::string>(body, "learner", "UKF"));
        r.initial = defaults.experiment.initial;
        if (body.contains("initial_mean")) r.initial.mean = vector_from_json(body["initial_mean"]);
        if (body.contains("initial_covariance")) r.initial.covariance = matrix_from_json(body["initial_covariance"]);
    } catch (const Error& e) {
        throw bad_request(e.what());
    }
    r.initial.covariance_tracked = r.learner != LearnerKind::PP;
    if (body.contains("env_id") && !body["env_id"].is_null()) r.env_id = field_or<int>(body, "env_id", 0);
    r.active_learning = field_or<bool>(body, "active_learning", false);
    r.seed = field_or<std::uint64_t>(body, "seed", 0);
    r.learning_rate = field_or<double>(body, "learning_rate", 1.0);
    r.learning_rate_schedule = field_or<std::vector<double>>(body, "learning_rate_schedule", {});
    if (r.env_id && r.active_learning) throw bad_request("give either env_id or active_learning, not both");
    if (!(r.learning_rate > 0.0)) throw bad_request("learning_rate must be positive");
    for (double a : r.learning_rate_schedule)
        if (!(a > 0.0)) throw bad_request("learning rates must be positive");
    try {
        r.initial.validate();
    } catch (const Error& e) {
        throw bad_request(e.what());
    }
    if (r.initial.dim() != kFeatureCount)
        throw bad_request("initial_mean must have " + std::to_string(kFeatureCount) + " entries");
    return r;
}

json SessionRequest::to_json() const {
    json out{{"learner", irlkf::to_string(learner)},
             {"initial_mean", vector_to_json(initial.mean)},
             {"initial_covariance", matrix_to_json(initial.covariance)},
             {"active_learning", active_learning},
             {"seed", seed},
             {"learning_rate", learning_rate},
             {"learning_rate_schedule", learning_rate_schedule}};
    out["env_id"] = env_id ? json(*env_id) : json(nullptr);
    return out;
}

SessionStore::SessionStore(AppConfig cfg, EnvironmentCatalog catalog, std::optional<std::filesystem::path> journal_dir)
    : cfg_(std::move(cfg)),
      catalog_(std::move(catalog)),
      config_hash_(config_hash(cfg_)),
      journal_dir_(std::move(journal_dir)) {
    if (journal_dir_) {
        std::filesystem::create_directories(*journal_dir_);
        recover();
    }
}

Environment SessionStore::next_environment(const SessionRequest& req, const PreferenceEstimate& est,
                                           int iteration) const {
    if (req.active_learning) {
        SelectionConfig sel = cfg_.experiment.selection;
        sel.jobs = 1;
        return select_environment(est, catalog_, cfg_.experiment.learner, cfg_.experiment.planner, sel).env;
    }
    if (req.env_id && iteration == 0) return catalog_.find(*req.env_id);
    // the environment stream of a harness repetition with this seed
    Rng rng(environment_stream_seed(req.seed));
    std::uint64_t idx = 0;
    for (int t = 0; t <= iteration; ++t) idx = uniform_index(rng, catalog_.size());
    return catalog_[static_cast<std::size_t>(idx)];
}

PreferenceEstimate SessionStore::apply(const SessionRequest& req, const PreferenceEstimate& est,
                                       const Environment& env, const Trajectory& robot, const Trajectory& corrected,
                                       int iteration, Mat* gain) const {
    const FeatureVector innovation = feature_vector(corrected, env) - feature_vector(robot, env);
    const LearnerConfig& lc = cfg_.experiment.learner;
    const PlannerConfig& pc = cfg_.experiment.planner;
    switch (req.learner) {
        case LearnerKind::PP: {
            const auto t = static_cast<std::size_t>(iteration);
            const double alpha = t < req.learning_rate_schedule.size() ? req.learning_rate_schedule[t]
                                                                       : req.learning_rate;
            if (gain) *gain = alpha * Mat::Identity(est.dim(), est.dim());
            return pp_update(est, innovation, alpha);
        }
        case LearnerKind::EKF: {
            KalmanStep s = ekf_update(est, innovation, observation_jacobian(est.mean, env, pc, lc.jacobian_step), lc);
            if (gain) *gain = s.gain;
            return s.estimate;
        }
        case LearnerKind::UKF: {
            KalmanStep s = ukf_update(est, innovation, planner_observation_model(env, pc), lc);
            if (gain) *gain = s.gain;
            return s.estimate;
        }
    }
    return est;
}

std::shared_ptr<SessionState> SessionStore::start(const std::string& id, const SessionRequest& req) const {
    auto s = std::make_shared<SessionState>();
    s->id = id;
    s->request = req;
    s->estimate = req.initial;
    s->env = next_environment(req, s->estimate, 0);
    s->trajectory = optimal_trajectory(s->estimate.mean, s->env, cfg_.experiment.planner);
    return s;
}

json SessionStore::summary(const SessionState& s) const {
    json out;
    out["id"] = s.id;
    out["learner"] = to_string(s.request.learner);
    out["iteration"] = s.iteration;
    out["config_hash"] = config_hash_;
    out["active_learning"] = s.request.active_learning;
    out["estimate"] = estimate_json(s.estimate);
    out["env"] = environment_to_json(s.env);
    out["trajectory"] = trajectory_to_json(s.trajectory);
    out["features"] = vector_to_json(feature_vector(s.trajectory, s.env));
    out["history_length"] = s.history.size();
    if (s.last_gain.size() > 0) out["last_gain"] = matrix_to_json(s.last_gain);
    return out;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
    return it->second;
}

json SessionStore::create(const json& body) {
    const SessionRequest req = SessionRequest::from_json(body, cfg_);
    if (req.env_id && !catalog_.contains(*req.env_id))
        throw ServiceError(404, "not_found", "environment " + std::to_string(*req.env_id) + " is not in the catalog");
    std::string id;
    {
        std::unique_lock lock(sessions_mutex_);
        do {
            id = hex64(splitmix64(++counter_ ^ 0x5E55'1011'0000'0000ULL));
        } while (sessions_.count(id));
        sessions_[id] = nullptr;
    }
    std::shared_ptr<SessionState> s;
    try {
        s = start(id, req);
    } catch (const Error& e) {
        std::unique_lock lock(sessions_mutex_);
        sessions_.erase(id);
        throw to_service_error(e);
    }
    auto entry = std::make_shared<Entry>();
    entry->state = s;
    {
        std::unique_lock lock(sessions_mutex_);
        sessions_[id] = entry;
    }
    journal(id, {{"event", "create"}, {"request", req.to_json()}});
    return summary(*s);
}

SessionState SessionStore::state(const std::string& id) const {
    auto entry = find(id);
    if (!entry) throw ServiceError(404, "not_found", "session '" + id + "' is still being created");
    std::lock_guard lock(entry->state_mutex);
    return *entry->state;
}

json SessionStore::get(const std::string& id) const { return summary(state(id)); }

json SessionStore::submit(const std::string& id, const json& body) {
    auto entry = find(id);
    if (!entry) throw ServiceError(404, "not_found", "session '" + id + "' is still being created");
    std::unique_lock hold(entry->update, std::try_to_lock);
    if (!hold.owns_lock())
        throw ServiceError(409, "conflict", "a correction for session '" + id + "' is already being processed");

    std::shared_ptr<const SessionState> current;
    {
        std::lock_guard lock(entry->state_mutex);
        current = entry->state;
    }
    if (!body.is_object() || !body.contains("trajectory"))
        throw bad_request("body must be an object with a 'trajectory' field");
    Trajectory corrected;
    try {
        corrected = trajectory_from_json(body["trajectory"]);
    } catch (const Error& e) {
        throw bad_request(e.what());
    }
    const auto problems = trajectory_problems(corrected, current->env, current->trajectory.horizon());
    if (!problems.empty()) throw ServiceError(400, "validation_error", "corrected trajectory is invalid", problems);

    auto next = std::make_shared<SessionState>(*current);
    try {
        next->estimate = apply(current->request, current->estimate, current->env, current->trajectory, corrected,
                               current->iteration, &next->last_gain);
        next->history.push_back({current->env.id, current->trajectory, corrected});
        next->iteration = current->iteration + 1;
        next->env = next_environment(current->request, next->estimate, next->iteration);
        next->trajectory = optimal_trajectory(next->estimate.mean, next->env, cfg_.experiment.planner);
    } catch (const Error& e) {
        throw to_service_error(e);
    }
    {
        std::lock_guard lock(entry->state_mutex);
        entry->state = next;
    }
    journal(id, {{"event", "correction"}, {"trajectory", trajectory_to_json(corrected)}});
    return summary(*next);
}

json SessionStore::plan(const std::string& id, const std::string& mode, const std::string& method,
                        const std::string& backend) const {
    const SessionState s = state(id);
    RiskMode rm;
    PlannerBackend be = PlannerBackend::Continuous;
    try {
        rm.attitude = parse_risk_attitude(mode);
        rm.method = parse_risk_method(method.empty() ? "reversed" : method);
        if (backend == "lattice")
            be = PlannerBackend::Lattice;
        else if (!backend.empty() && backend != "continuous")
            throw ContractViolation("unknown backend '" + backend + "'");
    } catch (const Error& e) {
        throw bad_request(e.what());
    }
    PreferenceEstimate est = s.estimate;
    if (!est.covariance_tracked) {
        est.covariance = Mat::Zero(est.dim(), est.dim());
        est.covariance_tracked = true;
    }
    try {
        const RiskPlan p = plan_risk_sensitive(est, s.env, rm, cfg_.experiment.planner, be);
        return {{"id", s.id},
                {"iteration", s.iteration},
                {"config_hash", config_hash_},
                {"mode", to_string(rm.attitude)},
                {"method", to_string(rm.method)},
                {"env_id", s.env.id},
                {"trajectory", trajectory_to_json(p.trajectory)},
                {"features", vector_to_json(feature_vector(p.trajectory, s.env))},
                {"chosen_gamma", vector_to_json(p.chosen_gamma)},
                {"gamma_index", p.gamma_index}};
    } catch (const Error& e) {
        throw to_service_error(e);
    }
}

json SessionStore::environments() const {
    json envs = json::array();
    for (const auto& e : catalog_) envs.push_back(environment_to_json(e));
    return {{"config_hash", config_hash_}, {"catalog_hash", hex64(catalog_.hash())}, {"environments", envs}};
}

json SessionStore::health() const {
    return {{"status", "ok"}, {"version", kVersion}, {"config_hash", config_hash_}, {"sessions", size()}};
}

std::size_t SessionStore::size() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

PreferenceEstimate SessionStore::replay(const std::string& id) const {
    const SessionState s = state(id);
    PreferenceEstimate est = s.request.initial;
    for (std::size_t t = 0; t < s.history.size(); ++t) {
        const auto& step = s.history[t];
        est = apply(s.request, est, catalog_.find(step.env_id), step.robot, step.corrected, static_cast<int>(t));
    }
    return est;
}

void SessionStore::journal(const std::string& id, const json& line) const {
    if (!journal_dir_) return;
    std::lock_guard lock(journal_mutex_);
    std::ofstream out(*journal_dir_ / (id + ".jsonl"), std::ios::app);
    out << line.dump() << '\n';
}

void SessionStore::recover() {
    for (const auto& file : std::filesystem::directory_iterator(*journal_dir_)) {
        if (file.path().extension() != ".jsonl") continue;
        const std::string id = file.path().stem().string();
        std::ifstream in(file.path());
        std::string text;
        std::shared_ptr<SessionState> s;
        while (std::getline(in, text)) {
            const json line = json::parse(text, nullptr, false);
            if (line.is_discarded() || !line.contains("event")) break;  // torn final write
            if (line["event"] == "create") {
                s = start(id, SessionRequest::from_json(line["request"], cfg_));
            } else if (s && line["event"] == "correction") {
                const Trajectory corrected = trajectory_from_json(line["trajectory"]);
                s->estimate = apply(s->request, s->estimate, s->env, s->trajectory, corrected, s->iteration,
                                    &s->last_gain);
                s->history.push_back({s->env.id, s->trajectory, corrected});
                ++s->iteration;
                s->env = next_environment(s->request, s->estimate, s->iteration);
                s->trajectory = optimal_trajectory(s->estimate.mean, s->env, cfg_.experiment.planner);
            }
        }
        if (!s) continue;
        auto entry = std::make_shared<Entry>();
        entry->state = s;
        sessions_[id] = entry;
        ++counter_;
    }
}

void install_routes(httplib::Server& server, SessionStore& store) {
    auto send = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    auto guarded = [send](auto&& fn) {
        return [fn, send](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const ServiceError& e) {
                send(res, e.status(), e.body());
            } catch (const Error& e) {
                const ServiceError se = to_service_error(e);
                send(res, se.status(), se.body());
            } catch (const std::exception& e) {
                send(res, 500, ServiceError(500, "internal", e.what()).body());
            }
        };
    };
    auto parse_body = [](const httplib::Request& req) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw bad_request("request body is not valid JSON");
        return body;
    };

    server.Post("/sessions", guarded([&store, send, parse_body](const httplib::Request& req, httplib::Response& res) {
                    send(res, 201, store.create(parse_body(req)));
                }));
    server.Get(R"(/sessions/([^/]+))", guarded([&store, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, store.get(req.matches[1]));
               }));
    server.Post(R"(/sessions/([^/]+)/corrections)",
                guarded([&store, send, parse_body](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, store.submit(req.matches[1], parse_body(req)));
                }));
    server.Get(R"(/sessions/([^/]+)/plan)",
               guarded([&store, send](const httplib::Request& req, httplib::Response& res) {
                   if (!req.has_param("mode")) throw bad_request("query parameter 'mode' is required");
                   send(res, 200,
                        store.plan(req.matches[1], req.get_param_value("mode"), req.get_param_value("method"),
                                   req.get_param_value("backend")));
               }));
    server.Get("/environments", guarded([&store, send](const httplib::Request&, httplib::Response& res) {
                   send(res, 200, store.environments());
               }));
    server.Get("/healthz", guarded([&store, send](const httplib::Request&, httplib::Response& res) {
                   send(res, 200, store.health());
               }));
    server.set_error_handler([send](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        send(res, res.status,
             ServiceError(res.status, res.status == 404 ? "not_found" : "http_error",
                          "no route for " + req.method + " " + req.path)
                 .body());
    });
}

}  // namespace irlkf
