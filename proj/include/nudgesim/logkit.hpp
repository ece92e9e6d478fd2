#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nudgesim/env_model.hpp"
#include "nudgesim/markov_engine.hpp"
#include "nudgesim/rng.hpp"
#include "nudgesim/time_util.hpp"

namespace nudgesim {

enum class EventType {
    app_action,
    nudge_delivered,
    nudge_opened,
    nudge_discarded,
    nudge_blocked,
    nudge_undelivered,
    session_start,
    session_end,
};

const char* event_type_name(EventType t);
std::optional<EventType> event_type_from_name(const std::string& name);

/// One log line in the wire schema. sync_ts is when the record reached the
/// server: equal to ts for online records, the start of the user's next
/// online session (or the end-of-horizon flush) for offline ones.
struct LogRecord {
    std::uint64_t event_seq = 0;  // strictly increasing per user, in ts order
    std::string user_id;
    TimestampMs ts = 0;
    TimestampMs sync_ts = 0;
    EventType event_type = EventType::app_action;
    std::string category;
    std::optional<std::string> session_id;
    bool online = true;
    std::vector<std::pair<std::string, std::string>> metadata;

    bool operator==(const LogRecord&) const = default;
};

/// Sentinel meaning "offline, sync point not yet known".
inline constexpr TimestampMs kSyncPending = -1;

enum class NudgeReaction { opened, discarded, blocked, undelivered };

const char* nudge_reaction_name(NudgeReaction r);

struct NudgeOutcome {
    int decision_day = 0;
    std::string nudge_type;
    NudgeReaction outcome = NudgeReaction::undelivered;
    bool delivered = false;  // false iff outcome == undelivered
};

struct NudgeResolution {
    NudgeOutcome outcome;
    std::vector<LogRecord> records;
};

/// Probability that a delivered (non-sticky-blocked) nudge gets blocked.
inline constexpr double kBlockProb = 0.01;

/// Translates one user-day of events into records: a session_start /
/// session_end bracket per session plus one app_action per event. Offline
/// records get sync_ts = kSyncPending; event_seq is left 0 for the caller
/// (see assign_event_seqs).
std::vector<LogRecord> emit_action_logs(const std::vector<ActionEvent>& events);

/// Where a pending nudge can be delivered: the start of the user's first
/// online session on the resolution day.
struct DeliverySlot {
    TimestampMs ts = 0;
    std::string session_id;
};

/// Resolves one pending nudge at the given day. A sticky-blocked user yields
/// outcome blocked (still delivered, so it counts toward the window). Without
/// a delivery slot the nudge is undelivered. Otherwise the reaction is drawn:
/// opened with probability min(1, p_open_base * sigma), else blocked with
/// probability kBlockProb, else discarded.
NudgeResolution resolve_nudge(const UserModel& user, const std::string& nudge_type,
                              int decision_day, int day, double sigma,
                              const std::optional<DeliverySlot>& slot,
                              double p_open_base, rng::RngStream& stream);

/// Sorts records by (ts, insertion order) and assigns event_seq starting from
/// next_seq; returns the next unused sequence number. Call once per user-day.
std::uint64_t assign_event_seqs(std::vector<LogRecord>& records, std::uint64_t next_seq);

/// Fills pending offline sync_ts values for one user's full record stream:
/// the first online session_start at or after the record's ts, else flush_ts.
void resolve_sync_timestamps(std::vector<LogRecord>& user_records, TimestampMs flush_ts);

/// Canonical JSON Lines bytes: fixed key order, ISO-8601 ms timestamps, one
/// record per line. Equal records always produce identical bytes.
std::string serialize_records(const std::vector<LogRecord>& records);

/// Raised by parse_records with the 1-based line number and offending field.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& field, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ", field '" + field +
                             "': " + message),
          line_(line),
          field_(field) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

std::vector<LogRecord> parse_records(const std::string& bytes);

}  // namespace nudgesim
