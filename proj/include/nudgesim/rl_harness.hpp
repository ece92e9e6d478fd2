#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nudgesim/env_model.hpp"
#include "nudgesim/logkit.hpp"
#include "nudgesim/metrics.hpp"
#include "nudgesim/rng.hpp"

namespace nudgesim {

/// Feature vector for one (user, day) decision, in env.rl.context_features
/// order. Built strictly from data of days < day.
struct ContextVector {
    std::string user_id;
    int day = 0;
    std::vector<double> values;
};

struct Decision {
    std::string user_id;
    int day = 0;
    std::string action;
    std::string policy_name;
};

/// State of one bandit arm. epsilon_greedy uses (pulls, value_estimate),
/// thompson_bernoulli the Beta posterior, lin_ucb the ridge design matrix A
/// (row-major d*d) and response vector b.
struct ArmState {
    std::uint64_t pulls = 0;
    double value_estimate = 0.0;
    double beta_a = 1.0;
    double beta_b = 1.0;
    std::vector<double> design;    // lin_ucb only
    std::vector<double> response;  // lin_ucb only
};

/// Serializable policy state. Learning policies: epsilon_greedy,
/// thompson_bernoulli, lin_ucb. Fixed baselines: never_nudge, always_nudge,
/// every_k_days (nudge when day % k == 0). Ties always break toward the
/// lowest action index.
struct PolicyState {
    std::string policy_name;
    std::vector<std::string> action_set;
    std::vector<ArmState> arms;
    int feature_dim = 0;
    PolicySpec hyper;
};

PolicyState make_policy(const PolicySpec& spec, const RlSpec& rl);

/// Exact round-trip: parse_policy(serialize_policy(p)) == p, so a
/// checkpointed policy resumes with an identical remaining trajectory.
std::string serialize_policy(const PolicyState& policy);
PolicyState parse_policy(const std::string& text);

/// Context for (user, day): windowed features read via query_window ending at
/// day - 1, days_since_signup from the user record. Never touches day >= the
/// decision day.
ContextVector build_context(const MetricStore& store, const UserModel& user, int day,
                            const Environment& env);

/// Value of env.rl.reward_metric at (user, day): the day-after outcome of a
/// decision made at the end of day - 1.
double compute_reward(const MetricStore& store, const UserModel& user, int day,
                      const Environment& env);

/// Rewards are binarized (>= 1) for thompson_bernoulli.
double binarize_reward(double reward);

std::vector<Decision> decide(PolicyState& policy, const std::vector<ContextVector>& contexts,
                             rng::RngStream& stream);

void update(PolicyState& policy, const Decision& decision, const ContextVector& context,
            double reward);

struct DayAggregate {
    int day = 0;
    std::vector<std::int64_t> action_counts;  // indexed like action_set
    double mean_reward = 0.0;                 // reward of this day's decisions; 0 on the final day
    double cumulative_mean_reward = 0.0;
};

struct ExperimentResult {
    std::string policy_name;
    std::vector<std::string> action_set;
    std::vector<DayAggregate> per_day;
    double total_mean_reward = 0.0;
};

struct RunOptions {
    /// Retain LogRecords across the run (needed to write logs.jsonl). When
    /// false, records are still produced per day for the metrics pipeline but
    /// discarded afterwards.
    bool keep_logs = true;
    int workers = 1;
    /// When nonempty, every metric upsert is appended to this journal file.
    std::string metrics_journal_path;
    /// Observes the matrix actually used for each (day, user index).
    std::function<void(int day, std::size_t user_index, const TransitionMatrix&)>
        matrix_observer;
};

struct RunOutputs {
    std::vector<LogRecord> logs;  // merged (day, user_id, event_seq) order
    MetricStore store;
    std::vector<Decision> decisions;
    ExperimentResult result;
    std::vector<UserModel> users;  // final states: histories, blocked flags
    PolicyState policy;
};

/// Runs the full daily loop over env.schedule.horizon_days: behavior
/// modulation, event generation, nudge resolution, metrics, policy reward
/// updates, and the day's decisions. Deterministic for a given env (including
/// seed) regardless of the worker count.
RunOutputs run_experiment(const Environment& env, const PolicySpec& policy_spec,
                          const RunOptions& options = {});

}  // namespace nudgesim
