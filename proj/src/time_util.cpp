#include "nudgesim/time_util.hpp"

#include <cstdio>

namespace nudgesim {

namespace {

// Civil-date conversions (Howard Hinnant's algorithms, public domain).
constexpr std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                         static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
    return {static_cast<int>(y + (m <= 2)), m, d};
}

}  // namespace

std::string format_timestamp(TimestampMs ts) {
    std::int64_t days = ts / kMsPerDay;
    std::int64_t rem = ts % kMsPerDay;
    if (rem < 0) {
        rem += kMsPerDay;
        --days;
    }
    const CivilDate date = civil_from_days(days);
    const int hour = static_cast<int>(rem / kMsPerHour);
    const int minute = static_cast<int>((rem / 60000) % 60);
    const int second = static_cast<int>((rem / 1000) % 60);
    const int milli = static_cast<int>(rem % 1000);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", date.year,
                  date.month, date.day, hour, minute, second, milli);
    return buf;
}

std::optional<TimestampMs> parse_timestamp(const std::string& text) {
    if (text.size() != 24 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
        return std::nullopt;
    }
    int y, mo, d, h, mi, s, ms;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &y, &mo, &d, &h, &mi,
                    &s, &ms) != 7) {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59) {
        return std::nullopt;
    }
    return days_from_civil(y, mo, d) * kMsPerDay + h * kMsPerHour + mi * 60000LL +
           s * 1000LL + ms;
}

}  // namespace nudgesim
