#include "nudgesim/rl_harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nudgesim/behavior.hpp"
#include "nudgesim/markov_engine.hpp"
#include "nudgesim/time_util.hpp"

namespace nudgesim {

using nlohmann::ordered_json;

namespace {

std::size_t action_index(const std::vector<std::string>& action_set,
                         const std::string& action) {
    for (std::size_t i = 0; i < action_set.size(); ++i) {
        if (action_set[i] == action) return i;
    }
    throw std::invalid_argument("action '" + action + "' not in action set");
}

std::size_t first_nudge_index(const std::vector<std::string>& action_set) {
    for (std::size_t i = 0; i < action_set.size(); ++i) {
        if (action_set[i] != kActionNoNudge) return i;
    }
    throw std::invalid_argument("action set has no nudge action");
}

/// Cholesky solve of A x = rhs for a symmetric positive definite row-major
/// d x d matrix. Feature dimensions are tiny, so no pivoting heroics.
std::vector<double> chol_solve(const std::vector<double>& a, std::vector<double> rhs, int d) {
    std::vector<double> l(a);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = l[i * d + j];
            for (int k = 0; k < j; ++k) sum -= l[i * d + k] * l[j * d + k];
            if (i == j) {
                if (sum <= 0.0) throw std::runtime_error("design matrix not positive definite");
                l[i * d + j] = std::sqrt(sum);
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    for (int i = 0; i < d; ++i) {
        double sum = rhs[i];
        for (int k = 0; k < i; ++k) sum -= l[i * d + k] * rhs[k];
        rhs[i] = sum / l[i * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
        double sum = rhs[i];
        for (int k = i + 1; k < d; ++k) sum -= l[k * d + i] * rhs[k];
        rhs[i] = sum / l[i * d + i];
    }
    return rhs;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

std::size_t argmax_lowest(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

bool is_learning_policy(const std::string& name) {
    return name == "epsilon_greedy" || name == "thompson_bernoulli" || name == "lin_ucb";
}

}  // namespace

PolicyState make_policy(const PolicySpec& spec, const RlSpec& rl) {
    PolicyState policy;
    policy.policy_name = spec.name;
    policy.action_set = rl.action_set;
    policy.feature_dim = static_cast<int>(rl.context_features.size());
    policy.hyper = spec;
    policy.arms.resize(rl.action_set.size());
    if (spec.name == "lin_ucb") {
        const int d = policy.feature_dim;
        for (auto& arm : policy.arms) {
            arm.design.assign(static_cast<std::size_t>(d) * d, 0.0);
            for (int i = 0; i < d; ++i) arm.design[i * d + i] = spec.linucb_ridge;
            arm.response.assign(d, 0.0);
        }
    }
    return policy;
}

std::string serialize_policy(const PolicyState& policy) {
    ordered_json doc;
    doc["policy_name"] = policy.policy_name;
    doc["action_set"] = policy.action_set;
    doc["feature_dim"] = policy.feature_dim;
    doc["hyper"] = {{"epsilon", policy.hyper.epsilon},
                    {"alpha", policy.hyper.linucb_alpha},
                    {"ridge", policy.hyper.linucb_ridge},
                    {"k", policy.hyper.every_k}};
    ordered_json arms = ordered_json::array();
    for (const auto& arm : policy.arms) {
        arms.push_back({{"pulls", arm.pulls},
                        {"value_estimate", arm.value_estimate},
                        {"beta_a", arm.beta_a},
                        {"beta_b", arm.beta_b},
                        {"design", arm.design},
                        {"response", arm.response}});
    }
    doc["arms"] = std::move(arms);
    return doc.dump();
}

PolicyState parse_policy(const std::string& text) {
    const ordered_json doc = ordered_json::parse(text);
    PolicyState policy;
    policy.policy_name = doc.at("policy_name").get<std::string>();
    policy.action_set = doc.at("action_set").get<std::vector<std::string>>();
    policy.feature_dim = doc.at("feature_dim").get<int>();
    policy.hyper.name = policy.policy_name;
    policy.hyper.epsilon = doc.at("hyper").at("epsilon").get<double>();
    policy.hyper.linucb_alpha = doc.at("hyper").at("alpha").get<double>();
    policy.hyper.linucb_ridge = doc.at("hyper").at("ridge").get<double>();
    policy.hyper.every_k = doc.at("hyper").at("k").get<int>();
    for (const auto& node : doc.at("arms")) {
        ArmState arm;
        arm.pulls = node.at("pulls").get<std::uint64_t>();
        arm.value_estimate = node.at("value_estimate").get<double>();
        arm.beta_a = node.at("beta_a").get<double>();
        arm.beta_b = node.at("beta_b").get<double>();
        arm.design = node.at("design").get<std::vector<double>>();
        arm.response = node.at("response").get<std::vector<double>>();
        policy.arms.push_back(std::move(arm));
    }
    return policy;
}

namespace {

/// Value of one catalog metric for (user, day). Windowed variants aggregate
/// the half-open window (day - d, day]; missing rows count as zero.
double metric_value(const MetricStore& store, const UserModel& user, int day,
                    const std::string& name, int d) {
    if (name == "days_since_signup") return static_cast<double>(day - user.signup_day);
    if (name == "actions_last_d" || name == "sessions_last_d" || name == "nudges_last_d" ||
        name == "open_rate_last_d") {
        const WindowValues w = store.query_window(user.user_id, day, d);
        if (name == "actions_last_d") return static_cast<double>(w.actions_last_d);
        if (name == "sessions_last_d") return static_cast<double>(w.sessions_last_d);
        if (name == "nudges_last_d") return static_cast<double>(w.nudges_last_d);
        return w.open_rate_last_d;
    }
    const MetricRow* row = store.find(user.user_id, day);
    if (!row) return 0.0;
    if (name == "daily_action_count") return static_cast<double>(row->daily_action_count);
    if (name == "session_count") return static_cast<double>(row->session_count);
    if (name == "active") return row->active ? 1.0 : 0.0;
    if (name == "nudges_delivered") return static_cast<double>(row->nudges_delivered);
    if (name == "nudges_opened") return static_cast<double>(row->nudges_opened);
    if (name == "open_rate") return row->open_rate;
    if (name == "online_fraction") return row->online_fraction;
    throw std::invalid_argument("unknown metric name '" + name + "'");
}

}  // namespace

ContextVector build_context(const MetricStore& store, const UserModel& user, int day,
                            const Environment& env) {
    ContextVector ctx;
    ctx.user_id = user.user_id;
    ctx.day = day;
    ctx.values.reserve(env.rl.context_features.size());
    // Only data strictly before the decision day feeds the context.
    const int data_day = day - 1;
    for (const auto& name : env.rl.context_features) {
        if (name == "days_since_signup") {
            ctx.values.push_back(static_cast<double>(day - user.signup_day));
        } else {
            ctx.values.push_back(metric_value(store, user, data_day, name,
                                              env.schedule.nudge_window_days));
        }
    }
    return ctx;
}

double compute_reward(const MetricStore& store, const UserModel& user, int day,
                      const Environment& env) {
    return metric_value(store, user, day, env.rl.reward_metric,
                        env.schedule.nudge_window_days);
}

double binarize_reward(double reward) { return reward >= 1.0 ? 1.0 : 0.0; }

std::vector<Decision> decide(PolicyState& policy, const std::vector<ContextVector>& contexts,
                             rng::RngStream& stream) {
    std::vector<Decision> decisions;
    decisions.reserve(contexts.size());
    const std::size_t k = policy.action_set.size();
    const std::size_t no_nudge = action_index(policy.action_set, kActionNoNudge);

    for (const auto& ctx : contexts) {
        std::size_t chosen = no_nudge;
        if (policy.policy_name == "never_nudge") {
            chosen = no_nudge;
        } else if (policy.policy_name == "always_nudge") {
            chosen = first_nudge_index(policy.action_set);
        } else if (policy.policy_name == "every_k_days") {
            chosen = (ctx.day % policy.hyper.every_k == 0)
                         ? first_nudge_index(policy.action_set)
                         : no_nudge;
        } else if (policy.policy_name == "epsilon_greedy") {
            if (stream.uniform() < policy.hyper.epsilon) {
                chosen = static_cast<std::size_t>(stream.below(k));
            } else {
                std::vector<double> estimates(k);
                for (std::size_t i = 0; i < k; ++i) estimates[i] = policy.arms[i].value_estimate;
                chosen = argmax_lowest(estimates);
            }
        } else if (policy.policy_name == "thompson_bernoulli") {
            std::vector<double> samples(k);
            for (std::size_t i = 0; i < k; ++i) {
                samples[i] = stream.beta(policy.arms[i].beta_a, policy.arms[i].beta_b);
            }
            chosen = argmax_lowest(samples);
        } else if (policy.policy_name == "lin_ucb") {
            const int d = policy.feature_dim;
            std::vector<double> scores(k);
            for (std::size_t i = 0; i < k; ++i) {
                const ArmState& arm = policy.arms[i];
                const std::vector<double> theta = chol_solve(arm.design, arm.response, d);
                const std::vector<double> z = chol_solve(arm.design, ctx.values, d);
                scores[i] = dot(theta, ctx.values) +
                            policy.hyper.linucb_alpha * std::sqrt(std::max(0.0, dot(ctx.values, z)));
            }
            chosen = argmax_lowest(scores);
        } else {
            throw std::invalid_argument("unknown policy '" + policy.policy_name + "'");
        }
        decisions.push_back({ctx.user_id, ctx.day, policy.action_set[chosen],
                             policy.policy_name});
    }
    return decisions;
}

void update(PolicyState& policy, const Decision& decision, const ContextVector& context,
            double reward) {
    if (!is_learning_policy(policy.policy_name)) return;
    ArmState& arm = policy.arms[action_index(policy.action_set, decision.action)];
    ++arm.pulls;
    if (policy.policy_name == "epsilon_greedy") {
        arm.value_estimate += (reward - arm.value_estimate) / static_cast<double>(arm.pulls);
    } else if (policy.policy_name == "thompson_bernoulli") {
        const double r = binarize_reward(reward);
        arm.beta_a += r;
        arm.beta_b += 1.0 - r;
    } else if (policy.policy_name == "lin_ucb") {
        const int d = policy.feature_dim;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                arm.design[i * d + j] += context.values[i] * context.values[j];
            }
            arm.response[i] += reward * context.values[i];
        }
    }
}

namespace {

struct UserDayOutput {
    SessionPlan plan;
    std::vector<ActionEvent> events;
    double sigma = 1.0;
};

struct PendingNudge {
    int decision_day = 0;
    std::string action;
    std::size_t history_index = 0;  // entry appended at decision time
};

}  // namespace

RunOutputs run_experiment(const Environment& env, const PolicySpec& policy_spec,
                          const RunOptions& options) {
    RunOutputs out;
    out.users = sample_population(env);
    out.policy = make_policy(policy_spec, env.rl);
    if (!options.metrics_journal_path.empty()) {
        out.store.attach_journal(options.metrics_journal_path);
    }

    const int horizon = env.schedule.horizon_days;
    const int window = env.schedule.nudge_window_days;
    const std::size_t n_users = out.users.size();
    const std::size_t no_nudge_idx = action_index(env.rl.action_set, kActionNoNudge);

    std::vector<const ContextSpec*> user_ctx(n_users);
    for (std::size_t i = 0; i < n_users; ++i) {
        user_ctx[i] = &env.context(out.users[i].context_id);
    }

    std::vector<std::uint64_t> next_seq(n_users, 1);
    std::vector<std::vector<PendingNudge>> pending(n_users);
    std::vector<Decision> last_decision(n_users);
    std::vector<ContextVector> last_context(n_users);

    out.result.policy_name = policy_spec.name;
    out.result.action_set = env.rl.action_set;
    out.result.per_day.resize(horizon);
    for (int day = 0; day < horizon; ++day) {
        out.result.per_day[day].day = day;
        out.result.per_day[day].action_counts.assign(env.rl.action_set.size(), 0);
    }

    const int workers = std::max(1, options.workers);
    std::vector<UserDayOutput> day_out(n_users);

    for (int day = 0; day < horizon; ++day) {
        // Behavior modulation + event generation; independent per user.
        auto simulate_range = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const UserModel& user = out.users[i];
                const ContextSpec& ctx = *user_ctx[i];
                const int n = nudge_count(user.nudge_history, day, window);
                const double sigma =
                    engagement_multiplier(user, n, ctx.decay_params).sigma;
                UserDayOutput& ud = day_out[i];
                ud.sigma = sigma;
                if (sigma == 1.0) {
                    if (options.matrix_observer)
                        options.matrix_observer(day, i, ctx.baseline_matrix);
                    rng::RngStream plan_stream(env.seed, rng::Stream::plan, i, day);
                    ud.plan = plan_day(ctx, sigma, day, plan_stream);
                    rng::RngStream walk_stream(env.seed, rng::Stream::walk, i, day);
                    ud.events =
                        simulate_day(user, ctx, ctx.baseline_matrix, day, ud.plan, walk_stream);
                } else {
                    const TransitionMatrix matrix =
                        modulate_matrix(ctx.baseline_matrix, sigma);
                    if (options.matrix_observer) options.matrix_observer(day, i, matrix);
                    rng::RngStream plan_stream(env.seed, rng::Stream::plan, i, day);
                    ud.plan = plan_day(ctx, sigma, day, plan_stream);
                    rng::RngStream walk_stream(env.seed, rng::Stream::walk, i, day);
                    ud.events = simulate_day(user, ctx, matrix, day, ud.plan, walk_stream);
                }
            }
        };
        if (workers == 1 || n_users < 2) {
            simulate_range(0, n_users);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (n_users + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(n_users, w * chunk);
                const std::size_t end = std::min(n_users, begin + chunk);
                if (begin < end) pool.emplace_back(simulate_range, begin, end);
            }
            for (auto& t : pool) t.join();
        }

        // Log assembly and nudge resolution, sequential in user order.
        std::vector<LogRecord> day_records;
        for (std::size_t i = 0; i < n_users; ++i) {
            UserModel& user = out.users[i];
            std::vector<LogRecord> records = emit_action_logs(day_out[i].events);

            std::optional<DeliverySlot> slot;
            for (const auto& rec : records) {
                if (rec.event_type == EventType::session_start && rec.online) {
                    slot = DeliverySlot{rec.ts, rec.session_id.value_or("")};
                    break;
                }
            }

            if (!pending[i].empty()) {
                rng::RngStream nudge_stream(env.seed, rng::Stream::nudge, i, day);
                std::vector<PendingNudge> still_pending;
                for (const auto& p : pending[i]) {
                    const bool expires = day >= p.decision_day + window;
                    const bool was_blocked = user.blocked;
                    if (!was_blocked && !slot && !expires) {
                        still_pending.push_back(p);
                        continue;
                    }
                    NudgeResolution res = resolve_nudge(
                        user, p.action, p.decision_day, day, day_out[i].sigma, slot,
                        env.delivery.p_open_base, nudge_stream);
                    if (res.outcome.outcome == NudgeReaction::blocked) user.blocked = true;
                    // The history entry was appended optimistically at decision
                    // time; correct it when the push never reached the user.
                    const bool counts =
                        res.outcome.delivered &&
                        (!was_blocked || env.delivery.count_blocked_nudges);
                    user.nudge_history[p.history_index].delivered = counts;
                    for (auto& rec : res.records) records.push_back(std::move(rec));
                }
                pending[i] = std::move(still_pending);
            }

            next_seq[i] = assign_event_seqs(records, next_seq[i]);
            if (options.keep_logs) {
                out.logs.insert(out.logs.end(), records.begin(), records.end());
            }
            day_records.insert(day_records.end(), std::make_move_iterator(records.begin()),
                               std::make_move_iterator(records.end()));
            day_out[i] = {};
        }

        out.store.upsert(compute_daily_metrics(day_records));

        // Rewards for yesterday's decisions arrive with today's metrics.
        if (day >= 1) {
            double reward_sum = 0.0;
            for (std::size_t i = 0; i < n_users; ++i) {
                const double reward = compute_reward(out.store, out.users[i], day, env);
                update(out.policy, last_decision[i], last_context[i], reward);
                reward_sum += reward;
            }
            out.result.per_day[day - 1].mean_reward =
                n_users > 0 ? reward_sum / static_cast<double>(n_users) : 0.0;
        }

        // Today's decisions; nudges join the pending queue for delivery.
        std::vector<ContextVector> contexts;
        contexts.reserve(n_users);
        for (std::size_t i = 0; i < n_users; ++i) {
            contexts.push_back(build_context(out.store, out.users[i], day, env));
        }
        rng::RngStream policy_stream(env.seed, rng::Stream::policy, day);
        std::vector<Decision> decisions = decide(out.policy, contexts, policy_stream);
        for (std::size_t i = 0; i < n_users; ++i) {
            const std::size_t arm = action_index(env.rl.action_set, decisions[i].action);
            ++out.result.per_day[day].action_counts[arm];
            if (arm != no_nudge_idx) {
                // Dispatched now, so it enters the nudge window immediately;
                // resolution later downgrades the entry if it never lands.
                UserModel& user = out.users[i];
                const bool counts = !user.blocked || env.delivery.count_blocked_nudges;
                pending[i].push_back({day, decisions[i].action, user.nudge_history.size()});
                user.nudge_history.push_back({day, decisions[i].action, counts});
            }
            last_decision[i] = decisions[i];
            last_context[i] = std::move(contexts[i]);
            out.decisions.push_back(std::move(decisions[i]));
        }
    }

    if (options.keep_logs) {
        // Offline records sync at the user's next online session; anything
        // still pending flushes at the end of the horizon.
        std::map<std::string, std::vector<std::size_t>> by_user;
        for (std::size_t r = 0; r < out.logs.size(); ++r) {
            by_user[out.logs[r].user_id].push_back(r);
        }
        const TimestampMs flush_ts = day_start_ms(horizon);
        for (auto& [user_id, indices] : by_user) {
            std::vector<LogRecord> stream;
            stream.reserve(indices.size());
            for (std::size_t r : indices) stream.push_back(std::move(out.logs[r]));
            resolve_sync_timestamps(stream, flush_ts);
            for (std::size_t k = 0; k < indices.size(); ++k) {
                out.logs[indices[k]] = std::move(stream[k]);
            }
        }
    }

    double cumulative = 0.0;
    for (auto& day_agg : out.result.per_day) {
        cumulative += day_agg.mean_reward;
        day_agg.cumulative_mean_reward = cumulative;
    }
    out.result.total_mean_reward = cumulative;
    return out;
}

}  // namespace nudgesim
