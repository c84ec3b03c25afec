#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "fleetsim/util.hpp"

namespace fleetsim {

constexpr std::int64_t kSecondsPerDay = 86400;

// Howard Hinnant's civil-date algorithms.
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

// Accepts "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD HH:MM:SS", optional trailing 'Z'.
// Timestamps are naive (no timezone math); returned as seconds since epoch.
inline std::int64_t parse_iso8601(std::string_view s, std::size_t line_no = 0) {
    auto fail = [&]() -> std::int64_t {
        std::string msg = "bad timestamp '" + std::string(s) + "'";
        if (line_no) msg += " at line " + std::to_string(line_no);
        throw ParseError(msg);
    };
    if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
    if (s.size() != 19) return fail();
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
        return fail();
    auto num = [&](int from, int len) {
        int v = 0;
        for (int i = from; i < from + len; ++i) {
            if (s[std::size_t(i)] < '0' || s[std::size_t(i)] > '9') fail();
            v = v * 10 + (s[std::size_t(i)] - '0');
        }
        return v;
    };
    int year = num(0, 4), mon = num(5, 2), day = num(8, 2);
    int hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) fail();
    return days_from_civil(year, unsigned(mon), unsigned(day)) * kSecondsPerDay +
           hh * 3600LL + mm * 60LL + ss;
}

inline std::string format_iso8601(std::int64_t t) {
    std::int64_t days = floor_div(t, kSecondsPerDay);
    std::int64_t sod = t - days * kSecondsPerDay;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", y, m, d, int(sod / 3600),
                  int((sod / 60) % 60), int(sod % 60));
    return buf;
}

inline std::int64_t day_number(std::int64_t t) { return floor_div(t, kSecondsPerDay); }

inline std::int64_t seconds_of_day(std::int64_t t) { return floor_mod(t, kSecondsPerDay); }

// 0 = Sunday .. 6 = Saturday (1970-01-01 was a Thursday).
inline int weekday(std::int64_t t) { return int(floor_mod(day_number(t) + 4, 7)); }

inline bool is_weekend(std::int64_t t) {
    int w = weekday(t);
    return w == 0 || w == 6;
}

}  // namespace fleetsim
