#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nudgesim {

/// UTC instant, milliseconds since the Unix epoch. All simulation time is UTC.
using TimestampMs = std::int64_t;

inline constexpr std::int64_t kMsPerSecond = 1000;
inline constexpr std::int64_t kMsPerHour = 3'600'000;
inline constexpr std::int64_t kMsPerDay = 86'400'000;

/// Simulation day 0 is 2024-01-01T00:00:00.000Z.
inline constexpr TimestampMs kSimEpochMs = 1'704'067'200'000;

constexpr TimestampMs day_start_ms(int day) {
    return kSimEpochMs + static_cast<std::int64_t>(day) * kMsPerDay;
}

/// Last representable millisecond of a simulation day.
constexpr TimestampMs day_end_ms(int day) { return day_start_ms(day + 1) - 1; }

/// Simulation day index covering the given instant (floor division).
constexpr int day_of(TimestampMs ts) {
    std::int64_t delta = ts - kSimEpochMs;
    std::int64_t d = delta / kMsPerDay;
    if (delta < 0 && delta % kMsPerDay != 0) --d;
    return static_cast<int>(d);
}

/// "2024-01-01T09:30:00.000Z" — fixed-width ISO-8601 UTC with milliseconds.
std::string format_timestamp(TimestampMs ts);

/// Parses the exact format produced by format_timestamp; nullopt on mismatch.
std::optional<TimestampMs> parse_timestamp(const std::string& text);

}  // namespace nudgesim
