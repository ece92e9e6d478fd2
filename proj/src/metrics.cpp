#include "nudgesim/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "nudgesim/time_util.hpp"

namespace nudgesim {

using nlohmann::ordered_json;

const std::vector<std::string>& metrics_catalog() {
    static const std::vector<std::string> catalog = {
        "daily_action_count", "session_count",    "active",
        "nudges_delivered",   "nudges_opened",    "open_rate",
        "online_fraction",    "actions_last_d",   "sessions_last_d",
        "nudges_last_d",      "open_rate_last_d", "days_since_signup",
    };
    return catalog;
}

bool metric_name_known(const std::string& name) {
    const auto& catalog = metrics_catalog();
    return std::find(catalog.begin(), catalog.end(), name) != catalog.end();
}

std::vector<MetricRow> compute_daily_metrics(const std::vector<LogRecord>& day_records) {
    struct Tally {
        std::int64_t actions = 0;
        std::int64_t sessions = 0;
        std::int64_t online_sessions = 0;
        std::int64_t delivered = 0;
        std::int64_t opened = 0;
    };
    std::map<std::string, Tally> tallies;
    int day = 0;
    bool day_set = false;
    for (const auto& rec : day_records) {
        Tally& t = tallies[rec.user_id];
        if (!day_set) {
            day = day_of(rec.ts);
            day_set = true;
        }
        switch (rec.event_type) {
            case EventType::app_action: ++t.actions; break;
            case EventType::session_start:
                ++t.sessions;
                if (rec.online) ++t.online_sessions;
                break;
            case EventType::nudge_delivered: ++t.delivered; break;
            case EventType::nudge_opened: ++t.opened; break;
            default: break;
        }
    }
    std::vector<MetricRow> rows;
    rows.reserve(tallies.size());
    for (const auto& [user_id, t] : tallies) {
        MetricRow row;
        row.user_id = user_id;
        row.day = day;
        row.daily_action_count = t.actions;
        row.session_count = t.sessions;
        row.active = t.actions >= 1;
        row.nudges_delivered = t.delivered;
        row.nudges_opened = t.opened;
        row.open_rate = t.delivered > 0
                            ? static_cast<double>(t.opened) / static_cast<double>(t.delivered)
                            : 0.0;
        row.online_fraction =
            t.sessions > 0
                ? static_cast<double>(t.online_sessions) / static_cast<double>(t.sessions)
                : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string metric_row_to_json(const MetricRow& row) {
    ordered_json node;
    node["user_id"] = row.user_id;
    node["day"] = row.day;
    node["daily_action_count"] = row.daily_action_count;
    node["session_count"] = row.session_count;
    node["active"] = row.active;
    node["nudges_delivered"] = row.nudges_delivered;
    node["nudges_opened"] = row.nudges_opened;
    node["open_rate"] = row.open_rate;
    node["online_fraction"] = row.online_fraction;
    return node.dump();
}

MetricRow metric_row_from_json(const std::string& line) {
    const ordered_json node = ordered_json::parse(line);
    MetricRow row;
    row.user_id = node.at("user_id").get<std::string>();
    row.day = node.at("day").get<int>();
    row.daily_action_count = node.at("daily_action_count").get<std::int64_t>();
    row.session_count = node.at("session_count").get<std::int64_t>();
    row.active = node.at("active").get<bool>();
    row.nudges_delivered = node.at("nudges_delivered").get<std::int64_t>();
    row.nudges_opened = node.at("nudges_opened").get<std::int64_t>();
    row.open_rate = node.at("open_rate").get<double>();
    row.online_fraction = node.at("online_fraction").get<double>();
    return row;
}

MetricStore MetricStore::open(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StoreError(path, "cannot open journal for reading");
    MetricStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            MetricRow row = metric_row_from_json(line);
            store.by_user_[row.user_id][row.day] = std::move(row);
        } catch (const nlohmann::json::exception& e) {
            throw StoreError(path, "bad journal line " + std::to_string(line_no) + ": " +
                                       e.what());
        }
    }
    return store;
}

void MetricStore::attach_journal(const std::string& path) {
    std::ofstream probe(path, std::ios::app);
    if (!probe) throw StoreError(path, "cannot open journal for appending");
    journal_path_ = path;
}

void MetricStore::upsert(const MetricRow& row) {
    by_user_[row.user_id][row.day] = row;
    if (!journal_path_.empty()) {
        std::ofstream out(journal_path_, std::ios::app);
        if (!out) throw StoreError(journal_path_, "journal append failed");
        out << metric_row_to_json(row) << '\n';
        if (!out) throw StoreError(journal_path_, "journal write failed");
    }
}

void MetricStore::upsert(const std::vector<MetricRow>& rows) {
    if (journal_path_.empty()) {
        for (const auto& row : rows) by_user_[row.user_id][row.day] = row;
        return;
    }
    std::ofstream out(journal_path_, std::ios::app);
    if (!out) throw StoreError(journal_path_, "journal append failed");
    for (const auto& row : rows) {
        by_user_[row.user_id][row.day] = row;
        out << metric_row_to_json(row) << '\n';
    }
    if (!out) throw StoreError(journal_path_, "journal write failed");
}

const MetricRow* MetricStore::find(const std::string& user_id, int day) const {
    auto user_it = by_user_.find(user_id);
    if (user_it == by_user_.end()) return nullptr;
    auto day_it = user_it->second.find(day);
    if (day_it == user_it->second.end()) return nullptr;
    return &day_it->second;
}

WindowValues MetricStore::query_window(const std::string& user_id, int day, int d) const {
    WindowValues values;
    auto user_it = by_user_.find(user_id);
    if (user_it == by_user_.end()) return values;
    std::int64_t delivered = 0;
    std::int64_t opened = 0;
    // Half-open window (day - d, day]; missing days count as zero.
    auto it = user_it->second.upper_bound(day - d);
    for (; it != user_it->second.end() && it->first <= day; ++it) {
        const MetricRow& row = it->second;
        values.actions_last_d += row.daily_action_count;
        values.sessions_last_d += row.session_count;
        values.nudges_last_d += row.nudges_delivered;
        delivered += row.nudges_delivered;
        opened += row.nudges_opened;
    }
    values.open_rate_last_d =
        delivered > 0 ? static_cast<double>(opened) / static_cast<double>(delivered) : 0.0;
    return values;
}

std::vector<MetricRow> MetricStore::rows() const {
    std::vector<MetricRow> all;
    all.reserve(size());
    for (const auto& [user, days] : by_user_) {
        for (const auto& [day, row] : days) all.push_back(row);
    }
    return all;
}

std::size_t MetricStore::size() const {
    std::size_t n = 0;
    for (const auto& [user, days] : by_user_) n += days.size();
    return n;
}

}  // namespace nudgesim
