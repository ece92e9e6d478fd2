#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nudgesim/logkit.hpp"

namespace nudgesim {

/// Per-(user, day) aggregate. Every field is recomputable from the day's log
/// records; open_rate and online_fraction default to 0 when undefined.
struct MetricRow {
    std::string user_id;
    int day = 0;
    std::int64_t daily_action_count = 0;
    std::int64_t session_count = 0;
    bool active = false;  // daily_action_count >= 1
    std::int64_t nudges_delivered = 0;
    std::int64_t nudges_opened = 0;
    double open_rate = 0.0;
    double online_fraction = 0.0;

    bool operator==(const MetricRow&) const = default;
};

/// Names accepted for rl.reward_metric and rl.context_features.
const std::vector<std::string>& metrics_catalog();
bool metric_name_known(const std::string& name);

/// One row per user appearing in the records. Precondition: all records share
/// one ts-day. Rows are sorted by user_id.
std::vector<MetricRow> compute_daily_metrics(const std::vector<LogRecord>& day_records);

/// Windowed aggregates over the half-open day window (day - d, day].
struct WindowValues {
    std::int64_t actions_last_d = 0;
    std::int64_t sessions_last_d = 0;
    std::int64_t nudges_last_d = 0;
    double open_rate_last_d = 0.0;
};

class StoreError : public std::runtime_error {
public:
    StoreError(const std::string& path, const std::string& cause)
        : std::runtime_error("metric store '" + path + "': " + cause) {}
};

/// Append-only JSON Lines journal with an in-memory index. upsert is
/// last-write-wins per (user_id, day) and idempotent on replay.
class MetricStore {
public:
    MetricStore() = default;

    /// Rebuilds the in-memory index from an existing journal file.
    static MetricStore open(const std::string& path);

    /// Future upserts are appended to the journal at this path.
    void attach_journal(const std::string& path);

    void upsert(const MetricRow& row);
    void upsert(const std::vector<MetricRow>& rows);

    /// nullptr when the (user, day) pair has never been written.
    const MetricRow* find(const std::string& user_id, int day) const;

    WindowValues query_window(const std::string& user_id, int day, int d) const;

    /// All rows in (user_id, day) order.
    std::vector<MetricRow> rows() const;

    std::size_t size() const;

private:
    std::map<std::string, std::map<int, MetricRow>> by_user_;
    std::string journal_path_;
};

std::string metric_row_to_json(const MetricRow& row);
MetricRow metric_row_from_json(const std::string& line);

}  // namespace nudgesim
