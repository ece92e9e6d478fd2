#include "nudgesim/logkit.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace nudgesim {

using nlohmann::ordered_json;

const char* event_type_name(EventType t) {
    switch (t) {
        case EventType::app_action: return "app_action";
        case EventType::nudge_delivered: return "nudge_delivered";
        case EventType::nudge_opened: return "nudge_opened";
        case EventType::nudge_discarded: return "nudge_discarded";
        case EventType::nudge_blocked: return "nudge_blocked";
        case EventType::nudge_undelivered: return "nudge_undelivered";
        case EventType::session_start: return "session_start";
        case EventType::session_end: return "session_end";
    }
    return "app_action";
}

std::optional<EventType> event_type_from_name(const std::string& name) {
    static const std::pair<const char*, EventType> table[] = {
        {"app_action", EventType::app_action},
        {"nudge_delivered", EventType::nudge_delivered},
        {"nudge_opened", EventType::nudge_opened},
        {"nudge_discarded", EventType::nudge_discarded},
        {"nudge_blocked", EventType::nudge_blocked},
        {"nudge_undelivered", EventType::nudge_undelivered},
        {"session_start", EventType::session_start},
        {"session_end", EventType::session_end},
    };
    for (const auto& [n, t] : table) {
        if (name == n) return t;
    }
    return std::nullopt;
}

const char* nudge_reaction_name(NudgeReaction r) {
    switch (r) {
        case NudgeReaction::opened: return "opened";
        case NudgeReaction::discarded: return "discarded";
        case NudgeReaction::blocked: return "blocked";
        case NudgeReaction::undelivered: return "undelivered";
    }
    return "undelivered";
}

namespace {

LogRecord base_record(const std::string& user_id, TimestampMs ts, EventType type,
                      std::string category, std::optional<std::string> session_id,
                      bool online) {
    LogRecord rec;
    rec.user_id = user_id;
    rec.ts = ts;
    rec.sync_ts = online ? ts : kSyncPending;
    rec.event_type = type;
    rec.category = std::move(category);
    rec.session_id = std::move(session_id);
    rec.online = online;
    return rec;
}

}  // namespace

std::vector<LogRecord> emit_action_logs(const std::vector<ActionEvent>& events) {
    std::vector<LogRecord> records;
    if (events.empty()) return records;
    records.reserve(events.size() + events.size() / 2 + 2);

    std::size_t i = 0;
    while (i < events.size()) {
        // Events arrive grouped by session, time-ordered within each group.
        std::size_t j = i;
        while (j < events.size() && events[j].session_id == events[i].session_id) ++j;
        const ActionEvent& first = events[i];
        const ActionEvent& last = events[j - 1];

        records.push_back(base_record(first.user_id, first.ts, EventType::session_start,
                                      "session", first.session_id, first.online));
        for (std::size_t k = i; k < j; ++k) {
            const ActionEvent& ev = events[k];
            LogRecord rec = base_record(ev.user_id, ev.ts, EventType::app_action,
                                        state_category(ev.state_name), ev.session_id,
                                        ev.online);
            rec.metadata.emplace_back("state", ev.state_name);
            records.push_back(std::move(rec));
        }
        records.push_back(base_record(last.user_id, last.ts, EventType::session_end,
                                      "session", last.session_id, last.online));
        i = j;
    }
    return records;
}

NudgeResolution resolve_nudge(const UserModel& user, const std::string& nudge_type,
                              int decision_day, int day, double sigma,
                              const std::optional<DeliverySlot>& slot,
                              double p_open_base, rng::RngStream& stream) {
    NudgeResolution res;
    res.outcome.decision_day = decision_day;
    res.outcome.nudge_type = nudge_type;

    auto nudge_record = [&](EventType type, TimestampMs ts,
                            std::optional<std::string> session_id) {
        LogRecord rec = base_record(user.user_id, ts, type, "nudge",
                                    std::move(session_id), true);
        rec.metadata.emplace_back("nudge_type", nudge_type);
        rec.metadata.emplace_back("decision_day", std::to_string(decision_day));
        return rec;
    };

    if (user.blocked) {
        // Sticky block: the push is still sent and counts toward the window,
        // but the user never sees it.
        const TimestampMs ts = slot ? slot->ts : day_start_ms(day);
        auto session_id = slot ? std::optional<std::string>(slot->session_id) : std::nullopt;
        res.outcome.outcome = NudgeReaction::blocked;
        res.outcome.delivered = true;
        res.records.push_back(nudge_record(EventType::nudge_delivered, ts, session_id));
        res.records.push_back(nudge_record(EventType::nudge_blocked, ts, session_id));
        return res;
    }

    if (!slot) {
        res.outcome.outcome = NudgeReaction::undelivered;
        res.outcome.delivered = false;
        res.records.push_back(
            nudge_record(EventType::nudge_undelivered, day_end_ms(day), std::nullopt));
        return res;
    }

    res.outcome.delivered = true;
    res.records.push_back(nudge_record(EventType::nudge_delivered, slot->ts, slot->session_id));
    const double p_open = std::min(1.0, p_open_base * sigma);
    EventType reaction_type;
    if (stream.uniform() < p_open) {
        res.outcome.outcome = NudgeReaction::opened;
        reaction_type = EventType::nudge_opened;
    } else if (stream.uniform() < kBlockProb) {
        res.outcome.outcome = NudgeReaction::blocked;
        reaction_type = EventType::nudge_blocked;
    } else {
        res.outcome.outcome = NudgeReaction::discarded;
        reaction_type = EventType::nudge_discarded;
    }
    res.records.push_back(nudge_record(reaction_type, slot->ts, slot->session_id));
    return res;
}

std::uint64_t assign_event_seqs(std::vector<LogRecord>& records, std::uint64_t next_seq) {
    std::stable_sort(records.begin(), records.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.ts < b.ts; });
    for (auto& rec : records) rec.event_seq = next_seq++;
    return next_seq;
}

void resolve_sync_timestamps(std::vector<LogRecord>& user_records, TimestampMs flush_ts) {
    std::vector<TimestampMs> online_session_starts;
    for (const auto& rec : user_records) {
        if (rec.event_type == EventType::session_start && rec.online) {
            online_session_starts.push_back(rec.ts);
        }
    }
    std::sort(online_session_starts.begin(), online_session_starts.end());
    for (auto& rec : user_records) {
        if (rec.sync_ts != kSyncPending) continue;
        auto it = std::lower_bound(online_session_starts.begin(),
                                   online_session_starts.end(), rec.ts);
        rec.sync_ts = (it != online_session_starts.end()) ? *it : flush_ts;
    }
}

std::string serialize_records(const std::vector<LogRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        ordered_json node;
        node["event_seq"] = rec.event_seq;
        node["user_id"] = rec.user_id;
        node["ts"] = format_timestamp(rec.ts);
        node["sync_ts"] = format_timestamp(rec.sync_ts);
        node["event_type"] = event_type_name(rec.event_type);
        node["category"] = rec.category;
        if (rec.session_id) {
            node["session_id"] = *rec.session_id;
        } else {
            node["session_id"] = nullptr;
        }
        node["online"] = rec.online;
        ordered_json metadata = ordered_json::object();
        for (const auto& [key, value] : rec.metadata) metadata[key] = value;
        node["metadata"] = std::move(metadata);
        out += node.dump();
        out += '\n';
    }
    return out;
}

std::vector<LogRecord> parse_records(const std::string& bytes) {
    std::vector<LogRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos) eol = bytes.size();
        const std::string line = bytes.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        ordered_json node;
        try {
            node = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, "<json>", e.what());
        }
        auto field = [&](const char* name) -> const ordered_json& {
            auto it = node.find(name);
            if (it == node.end()) throw ParseError(line_no, name, "missing");
            return *it;
        };
        LogRecord rec;
        try {
            rec.event_seq = field("event_seq").get<std::uint64_t>();
            rec.user_id = field("user_id").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, "event_seq/user_id", e.what());
        }
        auto ts = parse_timestamp(field("ts").is_string() ? field("ts").get<std::string>()
                                                          : std::string());
        if (!ts) throw ParseError(line_no, "ts", "bad timestamp");
        rec.ts = *ts;
        auto sync_ts = parse_timestamp(
            field("sync_ts").is_string() ? field("sync_ts").get<std::string>() : std::string());
        if (!sync_ts) throw ParseError(line_no, "sync_ts", "bad timestamp");
        rec.sync_ts = *sync_ts;
        const auto type =
            event_type_from_name(field("event_type").is_string()
                                     ? field("event_type").get<std::string>()
                                     : std::string());
        if (!type) throw ParseError(line_no, "event_type", "unknown event type");
        rec.event_type = *type;
        if (!field("category").is_string()) throw ParseError(line_no, "category", "expected string");
        rec.category = field("category").get<std::string>();
        const auto& session = field("session_id");
        if (session.is_string()) {
            rec.session_id = session.get<std::string>();
        } else if (!session.is_null()) {
            throw ParseError(line_no, "session_id", "expected string or null");
        }
        if (!field("online").is_boolean()) throw ParseError(line_no, "online", "expected bool");
        rec.online = field("online").get<bool>();
        const auto& metadata = field("metadata");
        if (!metadata.is_object()) throw ParseError(line_no, "metadata", "expected object");
        for (const auto& [key, value] : metadata.items()) {
            if (!value.is_string()) throw ParseError(line_no, "metadata", "expected string values");
            rec.metadata.emplace_back(key, value.get<std::string>());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace nudgesim
