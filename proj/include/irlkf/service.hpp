#pragma once

#include "irlkf/config.hpp"
#include "irlkf/errors.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace irlkf {

enum class LearnerKind { PP, EKF, UKF };
const char* to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& text);

/// A failed request: HTTP status, machine-readable code, message and a
/// list of specifics (e.g. offending waypoints).
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::vector<std::string> details = {});
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const std::vector<std::string>& details() const { return details_; }
    json body() const;

private:
    int status_;
    std::string code_;
    std::vector<std::string> details_;
};

/// Maps library errors onto ServiceError.
ServiceError to_service_error(const Error& e);

struct SessionRequest {
    LearnerKind learner = LearnerKind::UKF;
    PreferenceEstimate initial;
    std::optional<int> env_id;
    bool active_learning = false;
    std::uint64_t seed = 0;
    /// PP only: constant learning rate unless a schedule is given.
    double learning_rate = 1.0;
    std::vector<double> learning_rate_schedule;

    static SessionRequest from_json(const json& body, const AppConfig& defaults);
    json to_json() const;
};

struct SessionStep {
    int env_id = 0;
    Trajectory robot;
    Trajectory corrected;
};

/// Live state of one learning session.
struct SessionState {
    std::string id;
    SessionRequest request;
    PreferenceEstimate estimate;
    int iteration = 0;
    Environment env;
    Trajectory trajectory;
    std::vector<SessionStep> history;
    /// Gain of the last update; empty before the first.
    Mat last_gain;
};

/// In-memory sessions, optionally journaled to one JSON-lines file each.
/// A submission holds its session until the update completes; a second
/// concurrent submission to the same session is a conflict. Reads return
/// the last published state and never wait for planner work.
class SessionStore {
public:
    SessionStore(AppConfig cfg, EnvironmentCatalog catalog, std::optional<std::filesystem::path> journal_dir = {});

    json create(const json& body);
    json get(const std::string& id) const;
    json submit(const std::string& id, const json& body);
    json plan(const std::string& id, const std::string& mode, const std::string& method,
              const std::string& backend) const;
    json environments() const;
    json health() const;

    SessionState state(const std::string& id) const;
    /// Re-runs the recorded history from the initial estimate.
    PreferenceEstimate replay(const std::string& id) const;
    std::size_t size() const;

    const AppConfig& config() const { return cfg_; }
    const EnvironmentCatalog& catalog() const { return catalog_; }

private:
    struct Entry {
        std::mutex update;
        mutable std::mutex state_mutex;
        std::shared_ptr<const SessionState> state;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    json summary(const SessionState& s) const;
    Environment next_environment(const SessionRequest& req, const PreferenceEstimate& est, int iteration) const;
    PreferenceEstimate apply(const SessionRequest& req, const PreferenceEstimate& est, const Environment& env,
                             const Trajectory& robot, const Trajectory& corrected, int iteration,
                             Mat* gain = nullptr) const;
    std::shared_ptr<SessionState> start(const std::string& id, const SessionRequest& req) const;
    void journal(const std::string& id, const json& line) const;
    void recover();

    AppConfig cfg_;
    EnvironmentCatalog catalog_;
    std::string config_hash_;
    std::optional<std::filesystem::path> journal_dir_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
    mutable std::mutex journal_mutex_;
};

/// Eigen-decomposition of each 2x2 marginal of P, one entry per feature pair.
json covariance_ellipses(const Mat& p);

/// Installs the HTTP routes on `server`.
void install_routes(httplib::Server& server, SessionStore& store);

}  // namespace irlkf
