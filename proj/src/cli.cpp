#include "nudgesim/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "nudgesim/behavior.hpp"
#include "nudgesim/env_model.hpp"
#include "nudgesim/metrics.hpp"
#include "nudgesim/rl_harness.hpp"
#include "nudgesim/rng.hpp"

namespace nudgesim::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << bytes;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string hash_hex(const std::string& bytes) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64,
                  rng::fnv1a64(std::string_view(bytes)));
    return buf;
}

/// Shortest round-trip decimal form, same as the JSON outputs use.
std::string fmt_number(double v) { return nlohmann::json(v).dump(); }

std::string decisions_to_jsonl(const std::vector<Decision>& decisions) {
    std::string out;
    for (const auto& d : decisions) {
        ordered_json node;
        node["user_id"] = d.user_id;
        node["day"] = d.day;
        node["action"] = d.action;
        node["policy"] = d.policy_name;
        out += node.dump();
        out += '\n';
    }
    return out;
}

std::string result_to_json(const ExperimentResult& result) {
    ordered_json doc;
    doc["policy"] = result.policy_name;
    doc["action_set"] = result.action_set;
    ordered_json days = ordered_json::array();
    for (const auto& day : result.per_day) {
        ordered_json node;
        node["day"] = day.day;
        ordered_json counts = ordered_json::object();
        for (std::size_t i = 0; i < result.action_set.size(); ++i) {
            counts[result.action_set[i]] = day.action_counts[i];
        }
        node["action_counts"] = std::move(counts);
        node["mean_reward"] = day.mean_reward;
        node["cumulative_mean_reward"] = day.cumulative_mean_reward;
        days.push_back(std::move(node));
    }
    doc["per_day"] = std::move(days);
    doc["total_mean_reward"] = result.total_mean_reward;
    return doc.dump(2) + "\n";
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, bool quiet, int workers) {
    std::string config_text;
    try {
        config_text = read_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    Environment env;
    try {
        env = load_environment(config_text);
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitValidation;
    }
    if (seed_override) env.seed = *seed_override;

    const fs::path out_path(out_dir);
    std::error_code ec;
    if (fs::exists(out_path, ec)) {
        std::cerr << "error: output directory '" << out_dir << "' already exists\n";
        return kExitIo;
    }
    const fs::path tmp_path = out_path.string() + ".tmp";
    fs::remove_all(tmp_path, ec);
    if (!fs::create_directories(tmp_path, ec) || ec) {
        std::cerr << "error: cannot create '" << tmp_path.string() << "': " << ec.message()
                  << "\n";
        return kExitIo;
    }

    try {
        RunOptions options;
        options.keep_logs = true;
        options.workers = workers;
        options.metrics_journal_path = (tmp_path / "metrics.jsonl").string();
        const RunOutputs outputs = run_experiment(env, env.rl.policy, options);

        write_file(tmp_path / "logs.jsonl", serialize_records(outputs.logs));
        write_file(tmp_path / "decisions.jsonl", decisions_to_jsonl(outputs.decisions));
        write_file(tmp_path / "result.json", result_to_json(outputs.result));

        ordered_json manifest;
        manifest["tool_version"] = kToolVersion;
        manifest["seed"] = env.seed;
        manifest["config_hash"] = hash_hex(config_text);
        manifest["hash_algo"] = "fnv1a64";
        manifest["config"] = ordered_json::parse(serialize_environment(env));
        ordered_json files = ordered_json::array();
        for (const char* name :
             {"logs.jsonl", "metrics.jsonl", "decisions.jsonl", "result.json"}) {
            const std::string bytes = read_file(tmp_path / name);
            files.push_back({{"file", name},
                             {"bytes", bytes.size()},
                             {"fnv1a64", hash_hex(bytes)}});
        }
        manifest["outputs"] = std::move(files);
        write_file(tmp_path / "manifest.json", manifest.dump(2) + "\n");

        fs::rename(tmp_path, out_path);

        if (!quiet) {
            std::cout << "run complete: " << outputs.users.size() << " users, "
                      << env.schedule.horizon_days << " days, " << outputs.logs.size()
                      << " log records, " << outputs.decisions.size() << " decisions -> "
                      << out_dir << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        fs::remove_all(tmp_path, ec);
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

namespace {

Environment env_from_manifest(const fs::path& run_dir) {
    const ordered_json manifest = ordered_json::parse(read_file(run_dir / "manifest.json"));
    return load_environment(manifest.at("config").dump());
}

std::string export_decay_shapes(const Environment& env) {
    // Shapes of the first context's decay family over n = 0..50.
    const DecayParams& p = env.contexts.front().decay_params;
    std::string csv = "n,f,g,h\n";
    for (int n = 0; n <= 50; ++n) {
        csv += std::to_string(n) + "," + fmt_number(decay_f(n, p)) + "," +
               fmt_number(decay_g(n, p)) + "," + fmt_number(decay_h(n, p)) + "\n";
    }
    return csv;
}

std::string export_activity_curve(const Environment& env, const fs::path& run_dir) {
    const MetricStore store = MetricStore::open((run_dir / "metrics.jsonl").string());
    const double n_users = static_cast<double>(env.total_users());
    std::vector<double> actions(env.schedule.horizon_days, 0.0);
    std::vector<double> sessions(env.schedule.horizon_days, 0.0);
    std::vector<double> active(env.schedule.horizon_days, 0.0);
    for (const auto& row : store.rows()) {
        if (row.day < 0 || row.day >= env.schedule.horizon_days) continue;
        actions[row.day] += static_cast<double>(row.daily_action_count);
        sessions[row.day] += static_cast<double>(row.session_count);
        active[row.day] += row.active ? 1.0 : 0.0;
    }
    std::string csv = "day,mean_daily_actions,mean_sessions,active_fraction\n";
    for (int day = 0; day < env.schedule.horizon_days; ++day) {
        csv += std::to_string(day) + "," + fmt_number(actions[day] / n_users) + "," +
               fmt_number(sessions[day] / n_users) + "," +
               fmt_number(active[day] / n_users) + "\n";
    }
    return csv;
}

std::string export_regret_curve(const fs::path& run_dir) {
    const ordered_json result = ordered_json::parse(read_file(run_dir / "result.json"));
    const std::string policy = result.at("policy").get<std::string>();
    std::string csv = "day,policy,cumulative_reward\n";
    for (const auto& day : result.at("per_day")) {
        csv += std::to_string(day.at("day").get<int>()) + "," + policy + "," +
               fmt_number(day.at("cumulative_mean_reward").get<double>()) + "\n";
    }
    return csv;
}

std::string export_metrics_csv(const fs::path& run_dir) {
    const MetricStore store = MetricStore::open((run_dir / "metrics.jsonl").string());
    std::string csv =
        "user_id,day,daily_action_count,session_count,active,nudges_delivered,"
        "nudges_opened,open_rate,online_fraction\n";
    for (const auto& row : store.rows()) {
        csv += row.user_id + "," + std::to_string(row.day) + "," +
               std::to_string(row.daily_action_count) + "," +
               std::to_string(row.session_count) + "," + (row.active ? "true" : "false") +
               "," + std::to_string(row.nudges_delivered) + "," +
               std::to_string(row.nudges_opened) + "," + fmt_number(row.open_rate) + "," +
               fmt_number(row.online_fraction) + "\n";
    }
    return csv;
}

}  // namespace

int cmd_export(const std::string& run_dir, const std::string& what,
               const std::string& out_path) {
    const fs::path run_path(run_dir);
    try {
        std::string csv;
        if (what == "decay_shapes") {
            csv = export_decay_shapes(env_from_manifest(run_path));
        } else if (what == "activity_curve") {
            csv = export_activity_curve(env_from_manifest(run_path), run_path);
        } else if (what == "regret_curve") {
            csv = export_regret_curve(run_path);
        } else if (what == "metrics") {
            csv = export_metrics_csv(run_path);
        } else {
            std::cerr << "error: unknown export kind '" << what
                      << "' (expected activity_curve, regret_curve, decay_shapes, or "
                         "metrics)\n";
            return kExitValidation;
        }
        const fs::path target =
            out_path.empty() ? run_path / (what + ".csv") : fs::path(out_path);
        write_file(target, csv);
        std::cout << target.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

int cmd_inspect(const std::string& config_path) {
    std::string config_text;
    try {
        config_text = read_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    try {
        const Environment env = load_environment(config_text);
        const std::vector<UserModel> users = sample_population(env);
        std::cout << "seed: " << env.seed << "\n";
        std::cout << "schedule: " << env.schedule.horizon_days << " days, nudge window "
                  << env.schedule.nudge_window_days << " days\n";
        std::cout << "rl: reward=" << env.rl.reward_metric << " policy="
                  << env.rl.policy.name << " actions=[";
        for (std::size_t i = 0; i < env.rl.action_set.size(); ++i) {
            if (i) std::cout << ", ";
            std::cout << env.rl.action_set[i];
        }
        std::cout << "]\n";
        std::cout << "features: [";
        for (std::size_t i = 0; i < env.rl.context_features.size(); ++i) {
            if (i) std::cout << ", ";
            std::cout << env.rl.context_features[i];
        }
        std::cout << "]\n";
        for (const auto& ctx : env.contexts) {
            std::size_t count = 0;
            double sum_a = 0.0, sum_b = 0.0, sum_g = 0.0;
            for (const auto& user : users) {
                if (user.context_id != ctx.context_id) continue;
                ++count;
                sum_a += user.alpha;
                sum_b += user.beta;
                sum_g += user.gamma;
            }
            std::cout << "context " << ctx.context_id << ": " << count << " users, "
                      << ctx.baseline_matrix.states.size() << " states, rate "
                      << ctx.session_rate_per_day << "/day, hours ["
                      << ctx.active_hours_start << ", " << ctx.active_hours_end
                      << "), p_online " << ctx.p_online;
            if (count > 0) {
                const double n = static_cast<double>(count);
                std::cout << ", mean weights (" << fmt_number(sum_a / n) << ", "
                          << fmt_number(sum_b / n) << ", " << fmt_number(sum_g / n) << ")";
            }
            std::cout << "\n";
        }
        std::cout << "total users: " << users.size() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitValidation;
    }
}

}  // namespace nudgesim::cli
