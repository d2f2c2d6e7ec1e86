#pragma once

#include "irlkf/harness.hpp"
#include "irlkf/risk_planning.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace irlkf {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum class SweepKind { Laptop, Start, Risk };
const char* to_string(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& text);

struct SweepSettings {
    SweepKind kind = SweepKind::Laptop;
    int env_id = 0;
    /// Cells per axis.
    int resolution = 20;
};

struct RiskSettings {
    RiskMode mode;
    PlannerBackend backend = PlannerBackend::Continuous;
};

/// Everything a CLI invocation can configure. `experiment.arm` is unused;
/// the arms to run are listed in `arms`.
struct AppConfig {
    ExperimentConfig experiment;
    std::vector<Arm> arms{Arm::PP, Arm::KF, Arm::AL};
    int al_repetitions = 1;
    SweepSettings sweep;
    RiskSettings risk;
    int plan_env_id = 0;

    AppConfig();
};

/// A config problem tied to a key and, when known, a line of the source.
class ConfigError : public std::runtime_error {
public:
    struct Issue {
        std::string key;
        int line = 0;
        std::string message;
    };
    explicit ConfigError(std::vector<Issue> issues);
    const std::vector<Issue>& issues() const { return issues_; }

private:
    std::vector<Issue> issues_;
};

struct ConfigKey {
    std::string name;
    std::string help;
};

/// Every recognised key in output order, with a one-line description.
const std::vector<ConfigKey>& config_keys();

/// Flat {key: value} object holding every key.
json to_flat_json(const AppConfig& cfg);

/// Applies one key. Throws ConfigError naming the key on a bad value.
void apply_key(AppConfig& cfg, const std::string& key, const json& value, int line = 0);

/// Parses a flat JSON config on top of the defaults. A result manifest is
/// accepted too: its "config" object is used. `origin` labels diagnostics.
AppConfig parse_config(const std::string& text, const std::string& origin = "config");
AppConfig load_config(const std::string& path);

/// "key=value"; the value is read as JSON when it parses, else as a string.
void apply_override(AppConfig& cfg, const std::string& assignment);

/// Semantic checks across keys; throws ConfigError.
void validate_config(const AppConfig& cfg);

/// FNV-1a of the compact flat JSON, as 16 hex digits.
std::string config_hash(const AppConfig& cfg);

json matrix_to_json(const Mat& m);
json vector_to_json(const Vec& v);
Mat matrix_from_json(const json& j);
Vec vector_from_json(const json& j);
json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);
json environment_to_json(const Environment& env);

}  // namespace irlkf
