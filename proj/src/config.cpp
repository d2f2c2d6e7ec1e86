#include "irlkf/config.hpp"

#include "irlkf/catalog.hpp"
#include "irlkf/errors.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace irlkf {

const char* to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::Laptop: return "laptop";
        case SweepKind::Start: return "start";
        case SweepKind::Risk: return "risk";
    }
    return "?";
}

SweepKind parse_sweep_kind(const std::string& text) {
    if (text == "laptop") return SweepKind::Laptop;
    if (text == "start") return SweepKind::Start;
    if (text == "risk") return SweepKind::Risk;
    throw ContractViolation("unknown sweep kind '" + text + "' (expected laptop, start or risk)");
}

AppConfig::AppConfig() {
    experiment.user.true_theta = Weights(kFeatureCount);
    experiment.user.true_theta << 1.0, -1.0;
    experiment.user.noise_cov = 1e-2 * Mat::Identity(kFeatureCount, kFeatureCount);
    experiment.initial.mean = Weights::Zero(kFeatureCount);
    experiment.initial.covariance = Mat::Identity(kFeatureCount, kFeatureCount);
}

ConfigError::ConfigError(std::vector<Issue> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& i : issues) {
              msg += "\n  ";
              if (i.line > 0) msg += "line " + std::to_string(i.line) + ": ";
              if (!i.key.empty()) msg += i.key + ": ";
              msg += i.message;
          }
          return msg;
      }()),
      issues_(std::move(issues)) {}

json vector_to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json matrix_to_json(const Mat& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
    return out;
}

Vec vector_from_json(const json& j) {
    if (!j.is_array()) throw ContractViolation("expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ContractViolation("expected an array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Mat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ContractViolation("expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ContractViolation("matrix rows must have equal length");
        m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
    }
    return m;
}

json trajectory_to_json(const Trajectory& traj) {
    json out = json::array();
    for (const auto& p : traj.waypoints) out.push_back(json::array({p.x(), p.y()}));
    return out;
}

Trajectory trajectory_from_json(const json& j) {
    if (!j.is_array()) throw ContractViolation("trajectory must be an array of [x, y] pairs");
    Trajectory traj;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& p = j[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw ContractViolation("waypoint " + std::to_string(i) + " is not an [x, y] pair");
        traj.waypoints.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return traj;
}

json environment_to_json(const Environment& env) {
    return json{{"id", env.id},
                {"start", {env.start.x(), env.start.y()}},
                {"goal", {env.goal.x(), env.goal.y()}},
                {"laptop_center", {env.laptop_center.x(), env.laptop_center.y()}},
                {"table_min", {env.table.min.x(), env.table.min.y()}},
                {"table_max", {env.table.max.x(), env.table.max.y()}}};
}

namespace {

PlannerBackend parse_backend(const std::string& text) {
    if (text == "continuous") return PlannerBackend::Continuous;
    if (text == "lattice") return PlannerBackend::Lattice;
    throw ContractViolation("unknown planner backend '" + text + "' (expected continuous or lattice)");
}
const char* backend_name(PlannerBackend b) { return b == PlannerBackend::Continuous ? "continuous" : "lattice"; }

struct KeyDef {
    ConfigKey key;
    std::function<json(const AppConfig&)> get;
    std::function<void(AppConfig&, const json&)> set;
};

double as_number(const json& v) {
    if (!v.is_number()) throw ContractViolation("expected a number, got " + v.dump());
    return v.get<double>();
}

long long as_integer(const json& v) {
    if (!v.is_number_integer()) throw ContractViolation("expected an integer, got " + v.dump());
    return v.get<long long>();
}

std::uint64_t as_seed(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ContractViolation("expected a non-negative integer, got " + v.dump());
}

std::string as_string(const json& v) {
    if (!v.is_string()) throw ContractViolation("expected a string, got " + v.dump());
    return v.get<std::string>();
}

// Small helpers that bind a member reached through `field` to a key.
template <typename Field>
KeyDef real_key(std::string name, std::string help, Field field) {
    return {{std::move(name), std::move(help)},
            [field](const AppConfig& c) { return json(field(c)); },
            [field](AppConfig& c, const json& v) { field(c) = as_number(v); }};
}

template <typename Field>
KeyDef int_key(std::string name, std::string help, Field field) {
    return {{std::move(name), std::move(help)},
            [field](const AppConfig& c) { return json(field(c)); },
            [field](AppConfig& c, const json& v) {
                using T = std::remove_reference_t<decltype(field(c))>;
                const long long x = as_integer(v);
                if (std::is_unsigned_v<T> && x < 0) throw ContractViolation("expected a non-negative integer");
                field(c) = static_cast<T>(x);
            }};
}

template <typename Field>
KeyDef matrix_key(std::string name, std::string help, Field field) {
    return {{std::move(name), std::move(help)},
            [field](const AppConfig& c) { return matrix_to_json(field(c)); },
            [field](AppConfig& c, const json& v) { field(c) = matrix_from_json(v); }};
}

template <typename Field>
KeyDef vector_key(std::string name, std::string help, Field field) {
    return {{std::move(name), std::move(help)},
            [field](const AppConfig& c) { return vector_to_json(field(c)); },
            [field](AppConfig& c, const json& v) { field(c) = vector_from_json(v); }};
}

template <typename Field, typename Parse, typename Name>
KeyDef enum_key(std::string name, std::string help, Field field, Parse parse, Name print) {
    return {{std::move(name), std::move(help)},
            [field, print](const AppConfig& c) { return json(print(field(c))); },
            [field, parse](AppConfig& c, const json& v) { field(c) = parse(as_string(v)); }};
}

#define FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<KeyDef>& registry() {
    static const std::vector<KeyDef> keys = [] {
        std::vector<KeyDef> k;
        k.push_back({{"experiment.arms", "arms to run, in any order: PP, KF, AL"},
                     [](const AppConfig& c) {
                         json out = json::array();
                         for (Arm a : c.arms) out.push_back(to_string(a));
                         return out;
                     },
                     [](AppConfig& c, const json& v) {
                         if (!v.is_array()) throw ContractViolation("expected an array of arm names");
                         std::vector<Arm> arms;
                         for (const auto& a : v) arms.push_back(parse_arm(as_string(a)));
                         c.arms = std::move(arms);
                     }});
        k.push_back(int_key("experiment.iterations", "corrections per repetition", FIELD(experiment.iterations)));
        k.push_back(int_key("experiment.repetitions", "repetitions of the PP and KF arms",
                            FIELD(experiment.repetitions)));
        k.push_back(int_key("experiment.al_repetitions", "repetitions of the AL arm (it is deterministic)",
                            FIELD(al_repetitions)));
        k.push_back({{"experiment.master_seed", "seed every repetition is derived from"},
                     [](const AppConfig& c) { return json(c.experiment.master_seed); },
                     [](AppConfig& c, const json& v) { c.experiment.master_seed = as_seed(v); }});
        k.push_back(enum_key("experiment.filter", "Kalman variant of the KF and AL arms: ukf or ekf",
                             FIELD(experiment.filter), parse_kalman_variant,
                             [](KalmanVariant x) { return to_string(x); }));
        k.push_back(vector_key("initial.mean", "initial estimate mean", FIELD(experiment.initial.mean)));
        k.push_back(matrix_key("initial.covariance", "initial estimate covariance P0",
                               FIELD(experiment.initial.covariance)));
        k.push_back(enum_key("user.kind", "simulated user: biased_one_waypoint, intended_optimal, noisy_feature",
                             FIELD(experiment.user.kind), parse_user_kind, [](UserKind x) { return to_string(x); }));
        k.push_back(vector_key("user.true_theta", "the user's true weights", FIELD(experiment.user.true_theta)));
        k.push_back(real_key("user.correction_fraction",
                             "beta: how far the biased user moves the worst waypoint toward the intended one",
                             FIELD(experiment.user.correction_fraction)));
        k.push_back(matrix_key("user.noise_cov", "feature noise of the noisy_feature user",
                               FIELD(experiment.user.noise_cov)));
        k.push_back(matrix_key("learner.process_noise", "M", FIELD(experiment.learner.process_noise)));
        k.push_back(matrix_key("learner.observation_noise", "N", FIELD(experiment.learner.observation_noise)));
        k.push_back(real_key("learner.jacobian_step", "finite-difference step for the EKF Jacobian",
                             FIELD(experiment.learner.jacobian_step)));
        k.push_back(real_key("learner.sigma_alpha", "unscented spread alpha", FIELD(experiment.learner.sigma_alpha)));
        k.push_back(real_key("learner.sigma_beta", "unscented beta", FIELD(experiment.learner.sigma_beta)));
        k.push_back(real_key("learner.sigma_kappa", "unscented kappa", FIELD(experiment.learner.sigma_kappa)));
        k.push_back({{"learner.learning_rate_schedule", "PP learning rates; empty = calibrate from the KF arm"},
                     [](const AppConfig& c) { return json(c.experiment.learner.learning_rate_schedule); },
                     [](AppConfig& c, const json& v) {
                         if (!v.is_array()) throw ContractViolation("expected an array of numbers");
                         std::vector<double> s;
                         for (const auto& x : v) s.push_back(as_number(x));
                         c.experiment.learner.learning_rate_schedule = std::move(s);
                     }});
        k.push_back(int_key("planner.restarts", "optimizer restarts", FIELD(experiment.planner.restarts)));
        k.push_back(int_key("planner.max_iterations", "ascent iterations per restart",
                            FIELD(experiment.planner.max_iterations)));
        k.push_back(real_key("planner.step_size", "initial ascent step, in speed-limit units",
                             FIELD(experiment.planner.step_size)));
        k.push_back(real_key("planner.convergence_tol", "stop when no waypoint moves more than this",
                             FIELD(experiment.planner.convergence_tol)));
        k.push_back(int_key("planner.lattice_resolution", "lattice nodes per axis",
                            FIELD(experiment.planner.lattice_resolution)));
        k.push_back({{"planner.seed", "seed of the random restarts"},
                     [](const AppConfig& c) { return json(c.experiment.planner.seed); },
                     [](AppConfig& c, const json& v) { c.experiment.planner.seed = as_seed(v); }});
        k.push_back(int_key("planner.horizon", "T; trajectories have T+1 waypoints", FIELD(experiment.planner.horizon)));
        k.push_back(real_key("planner.max_step", "speed limit: longest segment", FIELD(experiment.planner.max_step)));
        k.push_back(real_key("planner.laptop_smoothing_start", "laptop bump width at the start of annealing",
                             FIELD(experiment.planner.laptop_smoothing_start)));
        k.push_back(real_key("planner.table_smoothing_start", "table sigmoid width at the start of annealing",
                             FIELD(experiment.planner.table_smoothing_start)));
        k.push_back(real_key("planner.table_smoothing_end", "table sigmoid width at the end of annealing",
                             FIELD(experiment.planner.table_smoothing_end)));
        k.push_back(real_key("planner.perturbation_scale", "largest bulge of a random restart",
                             FIELD(experiment.planner.perturbation_scale)));
        k.push_back(enum_key("selection.norm", "active learning score: frobenius, trace or spectral",
                             FIELD(experiment.selection.norm), parse_covariance_norm,
                             [](CovarianceNorm x) { return to_string(x); }));
        k.push_back(enum_key("selection.mode", "covariance prediction for active learning and sweeps: ekf or ukf",
                             FIELD(experiment.selection.mode), parse_prediction_mode,
                             [](PredictionMode x) { return to_string(x); }));
        k.push_back(enum_key("sweep.kind", "laptop, start or risk", FIELD(sweep.kind), parse_sweep_kind,
                             [](SweepKind x) { return to_string(x); }));
        k.push_back(int_key("sweep.env_id", "catalog environment the sweep starts from", FIELD(sweep.env_id)));
        k.push_back(int_key("sweep.resolution", "grid cells per axis", FIELD(sweep.resolution)));
        k.push_back(enum_key("risk.attitude", "averse, neutral or seeking", FIELD(risk.mode.attitude),
                             parse_risk_attitude, [](RiskAttitude x) { return to_string(x); }));
        k.push_back(enum_key("risk.method", "reversed or nested", FIELD(risk.mode.method), parse_risk_method,
                             [](RiskMethod x) { return to_string(x); }));
        k.push_back(enum_key("risk.backend", "continuous or lattice", FIELD(risk.backend), parse_backend,
                             backend_name));
        k.push_back(int_key("plan.env_id", "catalog environment for the plan subcommand", FIELD(plan_env_id)));
        return k;
    }();
    return keys;
}

#undef FIELD

const KeyDef* lookup(const std::string& name) {
    for (const auto& k : registry())
        if (k.key.name == name) return &k;
    return nullptr;
}

/// 1-based line of the first occurrence of "key" in the source text.
int line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& k : registry()) out.push_back(k.key);
        return out;
    }();
    return keys;
}

json to_flat_json(const AppConfig& cfg) {
    json out = json::object();
    for (const auto& k : registry()) out[k.key.name] = k.get(cfg);
    return out;
}

void apply_key(AppConfig& cfg, const std::string& key, const json& value, int line) {
    const KeyDef* def = lookup(key);
    if (!def) throw ConfigError({{key, line, "unknown key"}});
    try {
        def->set(cfg, value);
    } catch (const Error& e) {
        throw ConfigError({{key, line, e.what()}});
    }
}

AppConfig parse_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        int line = 1, col = 1;
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError({{"", line, origin + ": malformed JSON at column " + std::to_string(col)}});
    }
    if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) doc = doc["config"];
    if (!doc.is_object()) throw ConfigError({{"", 1, origin + ": top level must be an object"}});

    AppConfig cfg;
    std::vector<ConfigError::Issue> issues;
    for (const auto& [key, value] : doc.items()) {
        try {
            apply_key(cfg, key, value, line_of_key(text, key));
        } catch (const ConfigError& e) {
            for (const auto& i : e.issues()) issues.push_back(i);
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{"", 0, "cannot read config file '" + path + "'"}});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void apply_override(AppConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError({{"", 0, "override '" + assignment + "' is not key=value"}});
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    apply_key(cfg, key, value);
}

void validate_config(const AppConfig& cfg) {
    std::vector<ConfigError::Issue> issues;
    auto check = [&](const std::string& key, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            issues.push_back({key, 0, e.what()});
        }
    };
    ExperimentConfig base = cfg.experiment;
    check("initial", [&] { base.initial.validate(); });
    check("learner", [&] { base.learner.validate(base.initial.mean.size()); });
    check("planner", [&] { base.planner.validate(); });
    check("user", [&] { base.user.validate(); });
    if (base.user.true_theta.size() != base.initial.mean.size())
        issues.push_back({"user.true_theta", 0, "dimension differs from initial.mean"});
    if (base.iterations < 0) issues.push_back({"experiment.iterations", 0, "must be non-negative"});
    if (base.repetitions < 1) issues.push_back({"experiment.repetitions", 0, "must be positive"});
    if (cfg.al_repetitions < 1) issues.push_back({"experiment.al_repetitions", 0, "must be positive"});
    if (cfg.arms.empty()) issues.push_back({"experiment.arms", 0, "must name at least one arm"});
    const auto& schedule = base.learner.learning_rate_schedule;
    if (!schedule.empty() && schedule.size() < static_cast<std::size_t>(std::max(0, base.iterations)))
        issues.push_back({"learner.learning_rate_schedule", 0, "needs one rate per iteration"});
    for (double a : schedule)
        if (!(a > 0.0)) issues.push_back({"learner.learning_rate_schedule", 0, "rates must be positive"});
    if (cfg.sweep.resolution < 2) issues.push_back({"sweep.resolution", 0, "must be at least 2"});
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::string config_hash(const AppConfig& cfg) { return hex64(fnv1a64(to_flat_json(cfg).dump())); }

}  // namespace irlkf
