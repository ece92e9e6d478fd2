#include "nudgesim/env_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "nudgesim/metrics.hpp"

namespace nudgesim {

using nlohmann::ordered_json;

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string fmt_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

const ordered_json& require(const ordered_json& obj, const std::string& key,
                            const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key, "missing required key");
    return *it;
}

double require_number(const ordered_json& obj, const std::string& key,
                      const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v.get<double>();
}

double optional_number(const ordered_json& obj, const std::string& key, double fallback,
                       const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) throw ConfigError(path + "." + key, "expected a number");
    return it->get<double>();
}

std::string require_string(const ordered_json& obj, const std::string& key,
                           const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw ConfigError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

WeightDistribution parse_weight_dist(const ordered_json& node, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    const std::string type = require_string(node, "type", path);
    WeightDistribution dist;
    if (type == "point_mass") {
        dist.kind = WeightDistribution::Kind::point_mass;
        dist.p1 = require_number(node, "value", path);
        if (dist.p1 < 0.0) throw ConfigError(path + ".value", "must be >= 0");
    } else if (type == "uniform") {
        dist.kind = WeightDistribution::Kind::uniform;
        dist.p1 = require_number(node, "lo", path);
        dist.p2 = require_number(node, "hi", path);
        if (dist.p1 < 0.0) throw ConfigError(path + ".lo", "must be >= 0");
        if (dist.p2 < dist.p1) throw ConfigError(path + ".hi", "must be >= lo");
    } else if (type == "lognormal") {
        dist.kind = WeightDistribution::Kind::lognormal;
        dist.p1 = require_number(node, "mu", path);
        dist.p2 = require_number(node, "sigma", path);
        if (dist.p2 < 0.0) throw ConfigError(path + ".sigma", "must be >= 0");
    } else {
        throw ConfigError(path + ".type",
                          "unknown distribution '" + type +
                              "' (expected point_mass, uniform, or lognormal)");
    }
    return dist;
}

TransitionMatrix parse_matrix(const ordered_json& node, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    TransitionMatrix m;
    const auto& states = require(node, "states", path);
    if (!states.is_array() || states.empty())
        throw ConfigError(path + ".states", "expected a nonempty array");
    for (const auto& s : states) {
        if (!s.is_string()) throw ConfigError(path + ".states", "expected strings");
        m.states.push_back(s.get<std::string>());
    }
    const auto& rows = require(node, "rows", path);
    if (!rows.is_array()) throw ConfigError(path + ".rows", "expected an array");
    for (const auto& row : rows) {
        if (!row.is_array()) throw ConfigError(path + ".rows", "expected arrays of numbers");
        std::vector<double> r;
        for (const auto& v : row) {
            if (!v.is_number()) throw ConfigError(path + ".rows", "expected numbers");
            r.push_back(v.get<double>());
        }
        m.rows.push_back(std::move(r));
    }
    const auto& initial = require(node, "initial", path);
    if (!initial.is_array()) throw ConfigError(path + ".initial", "expected an array");
    for (const auto& v : initial) {
        if (!v.is_number()) throw ConfigError(path + ".initial", "expected numbers");
        m.initial.push_back(v.get<double>());
    }
    m.index_states();
    ValidationReport report = validate_matrix(m);
    if (!report.ok()) throw ConfigError(path, report.joined());
    return m;
}

ordered_json matrix_to_json(const TransitionMatrix& m) {
    ordered_json node;
    node["states"] = m.states;
    node["rows"] = m.rows;
    node["initial"] = m.initial;
    return node;
}

ordered_json weight_dist_to_json(const WeightDistribution& d) {
    ordered_json node;
    switch (d.kind) {
        case WeightDistribution::Kind::point_mass:
            node["type"] = "point_mass";
            node["value"] = d.p1;
            break;
        case WeightDistribution::Kind::uniform:
            node["type"] = "uniform";
            node["lo"] = d.p1;
            node["hi"] = d.p2;
            break;
        case WeightDistribution::Kind::lognormal:
            node["type"] = "lognormal";
            node["mu"] = d.p1;
            node["sigma"] = d.p2;
            break;
    }
    return node;
}

}  // namespace

double WeightDistribution::sample(rng::RngStream& stream) const {
    switch (kind) {
        case Kind::point_mass:
            return p1;
        case Kind::uniform:
            return stream.uniform(p1, p2);
        case Kind::lognormal:
            return stream.lognormal(p1, p2);
    }
    return p1;
}

void TransitionMatrix::index_states() {
    out_index = -1;
    session_start_index = -1;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == kStateOutOfApp) out_index = static_cast<int>(i);
        if (states[i] == kStateSessionStart) session_start_index = static_cast<int>(i);
    }
}

std::string ValidationReport::joined() const {
    std::string out;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) out += "; ";
        out += issues[i];
    }
    return out;
}

ValidationReport validate_matrix(const TransitionMatrix& m) {
    ValidationReport report;
    const std::size_t n = m.states.size();
    if (n == 0) {
        report.issues.push_back("empty state list");
        return report;
    }
    if (m.session_start_index < 0)
        report.issues.push_back("states missing distinguished state 'session_start'");
    if (m.out_index < 0)
        report.issues.push_back("states missing distinguished state 'out_of_app'");
    if (m.rows.size() != n)
        report.issues.push_back("expected " + std::to_string(n) + " rows, got " +
                                std::to_string(m.rows.size()));
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (m.rows[i].size() != n) {
            report.issues.push_back("row " + std::to_string(i) + " has " +
                                    std::to_string(m.rows[i].size()) + " entries, expected " +
                                    std::to_string(n));
            continue;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.rows[i][j];
            if (v < 0.0)
                report.issues.push_back("negative entry at (" + std::to_string(i) + "," +
                                        std::to_string(j) + ")");
            else if (v > 1.0)
                report.issues.push_back("entry > 1 at (" + std::to_string(i) + "," +
                                        std::to_string(j) + ")");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            report.issues.push_back("row sum " + fmt_double(sum) + " != 1 (row " +
                                    std::to_string(i) + ")");
    }
    if (m.out_index >= 0 && static_cast<std::size_t>(m.out_index) < m.rows.size() &&
        m.rows[m.out_index].size() == n) {
        for (std::size_t j = 0; j < n; ++j) {
            const double expected = (static_cast<int>(j) == m.out_index) ? 1.0 : 0.0;
            if (m.rows[m.out_index][j] != expected) {
                report.issues.push_back("out_of_app row is not absorbing");
                break;
            }
        }
    }
    if (m.initial.size() != n) {
        report.issues.push_back("initial distribution has " + std::to_string(m.initial.size()) +
                                " entries, expected " + std::to_string(n));
    } else {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.initial[j];
            if (v < 0.0 || v > 1.0)
                report.issues.push_back("initial distribution entry out of [0,1] at " +
                                        std::to_string(j));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            report.issues.push_back("initial distribution sum " + fmt_double(sum) + " != 1");
        if (m.out_index >= 0 && m.initial[m.out_index] != 0.0)
            report.issues.push_back("initial distribution places mass on out_of_app");
    }
    return report;
}

const ContextSpec& Environment::context(const std::string& id) const {
    for (const auto& ctx : contexts) {
        if (ctx.context_id == id) return ctx;
    }
    throw ConfigError("contexts", "unknown context_id '" + id + "'");
}

std::uint64_t Environment::total_users() const {
    std::uint64_t total = 0;
    for (const auto& entry : population) total += entry.user_count;
    return total;
}

Environment load_environment(const std::string& config_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(config_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("", "top level must be a JSON object");

    Environment env;
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned())
            throw ConfigError("seed", "expected an unsigned integer");
        env.seed = it->get<std::uint64_t>();
    }

    const auto& contexts = require(doc, "contexts", "");
    if (!contexts.is_array() || contexts.empty())
        throw ConfigError("contexts", "expected a nonempty array");
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const std::string path = "contexts[" + std::to_string(i) + "]";
        const auto& node = contexts[i];
        if (!node.is_object()) throw ConfigError(path, "expected an object");
        ContextSpec ctx;
        ctx.context_id = require_string(node, "context_id", path);
        for (const auto& prev : env.contexts) {
            if (prev.context_id == ctx.context_id)
                throw ConfigError(path + ".context_id",
                                  "duplicate context_id '" + ctx.context_id + "'");
        }
        ctx.baseline_matrix = parse_matrix(require(node, "baseline_matrix", path),
                                           path + ".baseline_matrix");
        ctx.session_rate_per_day =
            optional_number(node, "session_rate_per_day", 3.0, path);
        if (!(ctx.session_rate_per_day > 0.0))
            throw ConfigError(path + ".session_rate_per_day", "must be > 0");
        if (auto it = node.find("active_hours"); it != node.end()) {
            if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
                !(*it)[1].is_number())
                throw ConfigError(path + ".active_hours", "expected [start, end] hours");
            ctx.active_hours_start = (*it)[0].get<double>();
            ctx.active_hours_end = (*it)[1].get<double>();
        }
        if (ctx.active_hours_start < 0.0 || ctx.active_hours_end > 24.0 ||
            !(ctx.active_hours_start < ctx.active_hours_end))
            throw ConfigError(path + ".active_hours",
                              "need 0 <= start < end <= 24");
        ctx.p_online = optional_number(node, "p_online", 1.0, path);
        if (ctx.p_online < 0.0 || ctx.p_online > 1.0)
            throw ConfigError(path + ".p_online", "must be in [0,1]");
        if (auto it = node.find("decay_params"); it != node.end()) {
            const std::string dp = path + ".decay_params";
            if (!it->is_object()) throw ConfigError(dp, "expected an object");
            ctx.decay_params.k_a = optional_number(*it, "k_a", 0.2, dp);
            ctx.decay_params.k_b = optional_number(*it, "k_b", 1.0, dp);
            ctx.decay_params.a0 = optional_number(*it, "a0", 1.0, dp);
            ctx.decay_params.b0 = optional_number(*it, "b0", 1.0, dp);
            ctx.decay_params.c0 = optional_number(*it, "c0", 1.0, dp);
            if (!(ctx.decay_params.k_a > 0.0)) throw ConfigError(dp + ".k_a", "must be > 0");
            if (!(ctx.decay_params.k_b > 0.0)) throw ConfigError(dp + ".k_b", "must be > 0");
            if (ctx.decay_params.a0 < 0.0) throw ConfigError(dp + ".a0", "must be >= 0");
            if (ctx.decay_params.b0 < 0.0) throw ConfigError(dp + ".b0", "must be >= 0");
            if (ctx.decay_params.c0 < 0.0) throw ConfigError(dp + ".c0", "must be >= 0");
        }
        if (auto it = node.find("weight_distributions"); it != node.end()) {
            const std::string wd = path + ".weight_distributions";
            if (!it->is_object()) throw ConfigError(wd, "expected an object");
            if (auto a = it->find("alpha"); a != it->end())
                ctx.alpha_dist = parse_weight_dist(*a, wd + ".alpha");
            if (auto b = it->find("beta"); b != it->end())
                ctx.beta_dist = parse_weight_dist(*b, wd + ".beta");
            if (auto g = it->find("gamma"); g != it->end())
                ctx.gamma_dist = parse_weight_dist(*g, wd + ".gamma");
        }
        env.contexts.push_back(std::move(ctx));
    }

    const auto& population = require(doc, "population", "");
    if (!population.is_array() || population.empty())
        throw ConfigError("population", "expected a nonempty array");
    for (std::size_t i = 0; i < population.size(); ++i) {
        const std::string path = "population[" + std::to_string(i) + "]";
        const auto& node = population[i];
        if (!node.is_object()) throw ConfigError(path, "expected an object");
        PopulationEntry entry;
        entry.context_id = require_string(node, "context_id", path);
        bool found = false;
        for (const auto& ctx : env.contexts) found |= ctx.context_id == entry.context_id;
        if (!found)
            throw ConfigError(path + ".context_id",
                              "unknown context_id '" + entry.context_id + "'");
        const auto& count = require(node, "user_count", path);
        if (!count.is_number_unsigned())
            throw ConfigError(path + ".user_count", "expected an unsigned integer");
        entry.user_count = count.get<std::uint64_t>();
        env.population.push_back(std::move(entry));
    }

    const auto& schedule = require(doc, "schedule", "");
    if (!schedule.is_object()) throw ConfigError("schedule", "expected an object");
    const double horizon = require_number(schedule, "horizon_days", "schedule");
    if (horizon < 1.0 || horizon != std::floor(horizon))
        throw ConfigError("schedule.horizon_days", "must be an integer >= 1");
    env.schedule.horizon_days = static_cast<int>(horizon);
    const double dpd = optional_number(schedule, "decisions_per_day", 1.0, "schedule");
    if (dpd != 1.0)
        throw ConfigError("schedule.decisions_per_day", "fixed at 1 in this version");
    const double window = optional_number(schedule, "nudge_window_days", 5.0, "schedule");
    if (window < 1.0 || window != std::floor(window))
        throw ConfigError("schedule.nudge_window_days", "must be an integer >= 1");
    env.schedule.nudge_window_days = static_cast<int>(window);

    if (auto it = doc.find("rl"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("rl", "expected an object");
        const auto& rl = *it;
        if (rl.contains("reward_metric"))
            env.rl.reward_metric = require_string(rl, "reward_metric", "rl");
        if (auto f = rl.find("context_features"); f != rl.end()) {
            if (!f->is_array()) throw ConfigError("rl.context_features", "expected an array");
            env.rl.context_features.clear();
            for (const auto& name : *f) {
                if (!name.is_string())
                    throw ConfigError("rl.context_features", "expected strings");
                env.rl.context_features.push_back(name.get<std::string>());
            }
        }
        if (auto a = rl.find("action_set"); a != rl.end()) {
            if (!a->is_array()) throw ConfigError("rl.action_set", "expected an array");
            env.rl.action_set.clear();
            for (const auto& name : *a) {
                if (!name.is_string()) throw ConfigError("rl.action_set", "expected strings");
                env.rl.action_set.push_back(name.get<std::string>());
            }
        }
        if (auto p = rl.find("policy"); p != rl.end()) {
            if (!p->is_object()) throw ConfigError("rl.policy", "expected an object");
            env.rl.policy.name = require_string(*p, "name", "rl.policy");
            env.rl.policy.epsilon =
                optional_number(*p, "epsilon", env.rl.policy.epsilon, "rl.policy");
            env.rl.policy.linucb_alpha =
                optional_number(*p, "alpha", env.rl.policy.linucb_alpha, "rl.policy");
            env.rl.policy.linucb_ridge =
                optional_number(*p, "ridge", env.rl.policy.linucb_ridge, "rl.policy");
            env.rl.policy.every_k = static_cast<int>(
                optional_number(*p, "k", env.rl.policy.every_k, "rl.policy"));
            static const std::vector<std::string> known = {
                "epsilon_greedy", "thompson_bernoulli", "lin_ucb",
                "never_nudge",    "always_nudge",       "every_k_days"};
            if (std::find(known.begin(), known.end(), env.rl.policy.name) == known.end())
                throw ConfigError("rl.policy.name",
                                  "unknown policy '" + env.rl.policy.name + "'");
            if (env.rl.policy.epsilon < 0.0 || env.rl.policy.epsilon > 1.0)
                throw ConfigError("rl.policy.epsilon", "must be in [0,1]");
            if (env.rl.policy.every_k < 1)
                throw ConfigError("rl.policy.k", "must be >= 1");
        }
    }
    if (!metric_name_known(env.rl.reward_metric))
        throw ConfigError("rl.reward_metric",
                          "unknown metric name '" + env.rl.reward_metric + "'");
    for (std::size_t i = 0; i < env.rl.context_features.size(); ++i) {
        if (!metric_name_known(env.rl.context_features[i]))
            throw ConfigError("rl.context_features[" + std::to_string(i) + "]",
                              "unknown metric name '" + env.rl.context_features[i] + "'");
    }
    if (env.rl.action_set.size() < 2)
        throw ConfigError("rl.action_set", "need at least {no_nudge, <nudge type>}");
    if (std::find(env.rl.action_set.begin(), env.rl.action_set.end(), kActionNoNudge) ==
        env.rl.action_set.end())
        throw ConfigError("rl.action_set", "must contain 'no_nudge'");
    for (std::size_t i = 0; i < env.rl.action_set.size(); ++i) {
        for (std::size_t j = i + 1; j < env.rl.action_set.size(); ++j) {
            if (env.rl.action_set[i] == env.rl.action_set[j])
                throw ConfigError("rl.action_set",
                                  "duplicate action '" + env.rl.action_set[i] + "'");
        }
    }

    if (auto it = doc.find("delivery"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("delivery", "expected an object");
        env.delivery.p_open_base =
            optional_number(*it, "p_open_base", env.delivery.p_open_base, "delivery");
        if (env.delivery.p_open_base < 0.0 || env.delivery.p_open_base > 1.0)
            throw ConfigError("delivery.p_open_base", "must be in [0,1]");
        if (auto cb = it->find("count_blocked_nudges"); cb != it->end()) {
            if (!cb->is_boolean())
                throw ConfigError("delivery.count_blocked_nudges", "expected a boolean");
            env.delivery.count_blocked_nudges = cb->get<bool>();
        }
    }

    return env;
}

std::string serialize_environment(const Environment& env) {
    ordered_json doc;
    doc["seed"] = env.seed;
    doc["schedule"] = {{"horizon_days", env.schedule.horizon_days},
                       {"decisions_per_day", env.schedule.decisions_per_day},
                       {"nudge_window_days", env.schedule.nudge_window_days}};
    ordered_json contexts = ordered_json::array();
    for (const auto& ctx : env.contexts) {
        ordered_json node;
        node["context_id"] = ctx.context_id;
        node["baseline_matrix"] = matrix_to_json(ctx.baseline_matrix);
        node["session_rate_per_day"] = ctx.session_rate_per_day;
        node["active_hours"] = {ctx.active_hours_start, ctx.active_hours_end};
        node["p_online"] = ctx.p_online;
        node["decay_params"] = {{"k_a", ctx.decay_params.k_a},
                                {"k_b", ctx.decay_params.k_b},
                                {"a0", ctx.decay_params.a0},
                                {"b0", ctx.decay_params.b0},
                                {"c0", ctx.decay_params.c0}};
        node["weight_distributions"] = {{"alpha", weight_dist_to_json(ctx.alpha_dist)},
                                        {"beta", weight_dist_to_json(ctx.beta_dist)},
                                        {"gamma", weight_dist_to_json(ctx.gamma_dist)}};
        contexts.push_back(std::move(node));
    }
    doc["contexts"] = std::move(contexts);
    ordered_json population = ordered_json::array();
    for (const auto& entry : env.population) {
        population.push_back(
            {{"context_id", entry.context_id}, {"user_count", entry.user_count}});
    }
    doc["population"] = std::move(population);
    ordered_json rl;
    rl["reward_metric"] = env.rl.reward_metric;
    rl["context_features"] = env.rl.context_features;
    rl["action_set"] = env.rl.action_set;
    rl["policy"] = {{"name", env.rl.policy.name},
                    {"epsilon", env.rl.policy.epsilon},
                    {"alpha", env.rl.policy.linucb_alpha},
                    {"ridge", env.rl.policy.linucb_ridge},
                    {"k", env.rl.policy.every_k}};
    doc["rl"] = std::move(rl);
    doc["delivery"] = {{"p_open_base", env.delivery.p_open_base},
                       {"count_blocked_nudges", env.delivery.count_blocked_nudges}};
    return doc.dump(2) + "\n";
}

std::vector<UserModel> sample_population(const Environment& env) {
    std::vector<UserModel> users;
    users.reserve(env.total_users());
    rng::RngStream stream(env.seed, rng::Stream::population);
    std::uint64_t index = 0;
    for (const auto& entry : env.population) {
        const ContextSpec& ctx = env.context(entry.context_id);
        for (std::uint64_t i = 0; i < entry.user_count; ++i) {
            ++index;
            UserModel user;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "u%06llu",
                          static_cast<unsigned long long>(index));
            user.user_id = buf;
            user.context_id = entry.context_id;
            user.alpha = ctx.alpha_dist.sample(stream);
            user.beta = ctx.beta_dist.sample(stream);
            user.gamma = ctx.gamma_dist.sample(stream);
            users.push_back(std::move(user));
        }
    }
    return users;
}

}  // namespace nudgesim
