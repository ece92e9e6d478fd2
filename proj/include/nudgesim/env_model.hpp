#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nudgesim/rng.hpp"

namespace nudgesim {

inline constexpr const char* kStateSessionStart = "session_start";
inline constexpr const char* kStateOutOfApp = "out_of_app";
inline constexpr const char* kActionNoNudge = "no_nudge";

/// Raised by config loading/validation; path points at the offending element,
/// e.g. "contexts[0].baseline_matrix".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Shape parameters of the nudge-response decay family.
struct DecayParams {
    double k_a = 0.2;
    double k_b = 1.0;
    double a0 = 1.0;
    double b0 = 1.0;
    double c0 = 1.0;
};

/// Distribution over nonnegative reals for sampling per-user response weights.
struct WeightDistribution {
    enum class Kind { point_mass, uniform, lognormal };
    Kind kind = Kind::point_mass;
    double p1 = 0.0;  // value | lo | mu
    double p2 = 0.0;  // unused | hi | sigma

    double sample(rng::RngStream& stream) const;
};

/// Row-stochastic matrix over the app-state alphabet. The state list must
/// contain `session_start` and `out_of_app`; the latter is absorbing and the
/// initial distribution places no mass on it.
struct TransitionMatrix {
    std::vector<std::string> states;
    std::vector<std::vector<double>> rows;
    std::vector<double> initial;
    int out_index = -1;
    int session_start_index = -1;

    /// Recomputes the cached state indices; -1 when a name is missing.
    void index_states();

    bool operator==(const TransitionMatrix& other) const {
        return states == other.states && rows == other.rows && initial == other.initial;
    }
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
    std::string joined() const;
};

/// Structural and stochasticity checks: squareness, row sums within 1e-12,
/// entries in [0,1], absorbing out_of_app row, initial distribution support.
ValidationReport validate_matrix(const TransitionMatrix& m);

struct ContextSpec {
    std::string context_id;
    TransitionMatrix baseline_matrix;
    double session_rate_per_day = 3.0;
    double active_hours_start = 8.0;  // [start, end) in UTC hours of day
    double active_hours_end = 20.0;
    double p_online = 1.0;
    DecayParams decay_params;
    WeightDistribution alpha_dist{WeightDistribution::Kind::point_mass, 1.0, 0.0};
    WeightDistribution beta_dist;
    WeightDistribution gamma_dist;
};

struct PopulationEntry {
    std::string context_id;
    std::uint64_t user_count = 0;
};

struct Schedule {
    int horizon_days = 1;
    int decisions_per_day = 1;  // fixed at 1
    int nudge_window_days = 5;
};

struct PolicySpec {
    std::string name = "thompson_bernoulli";
    double epsilon = 0.1;
    double linucb_alpha = 1.0;
    double linucb_ridge = 1.0;
    int every_k = 2;  // for the every_k_days baseline
};

struct RlSpec {
    std::string reward_metric = "daily_action_count";
    std::vector<std::string> context_features = {"actions_last_d", "nudges_last_d"};
    std::vector<std::string> action_set = {"no_nudge", "nudge"};
    PolicySpec policy;
};

struct DeliveryParams {
    double p_open_base = 0.3;
    bool count_blocked_nudges = true;
};

/// Full simulation configuration. Immutable after load; safe to share across
/// worker threads.
struct Environment {
    std::vector<ContextSpec> contexts;
    std::vector<PopulationEntry> population;
    Schedule schedule;
    RlSpec rl;
    DeliveryParams delivery;
    std::uint64_t seed = 0;

    const ContextSpec& context(const std::string& id) const;
    std::uint64_t total_users() const;
};

struct NudgeHistoryEntry {
    int day = 0;
    std::string nudge_type;
    bool delivered = false;  // counts toward the nudge-window total when true
};

/// One synthetic user. The sampled fields (id, context, weights) never change;
/// nudge_history and blocked evolve as the run progresses.
struct UserModel {
    std::string user_id;
    std::string context_id;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::vector<NudgeHistoryEntry> nudge_history;
    bool blocked = false;
    int signup_day = 0;
};

/// Parses and validates a JSON config document per the schema shipped in
/// schemas/config.schema.json. Throws ConfigError with the offending path.
Environment load_environment(const std::string& config_text);

/// Canonical JSON for the environment; load_environment(serialize_environment(e))
/// reproduces e field-by-field.
std::string serialize_environment(const Environment& env);

/// Draws the configured population: user ids "u000001".. in sampling order,
/// weights from the per-context distributions. Pure function of (env, seed).
std::vector<UserModel> sample_population(const Environment& env);

}  // namespace nudgesim
