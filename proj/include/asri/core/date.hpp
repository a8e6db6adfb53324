#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "asri/core/error.hpp"

namespace asri {

// Calendar day, UTC. All series in the engine are daily-stamped.
using Date = std::chrono::sys_days;
using Days = std::chrono::days;

inline Date make_date(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) fail(ErrorKind::data, "invalid calendar date");
    return Date{ymd};
}

// Strict YYYY-MM-DD.
inline Date parse_date(std::string_view s) {
    auto bad = [&] { fail(ErrorKind::data, "bad ISO date '" + std::string(s) + "'"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') bad();
    int y = 0;
    unsigned m = 0, d = 0;
    for (int i = 0; i < 4; ++i) {
        if (s[i] < '0' || s[i] > '9') bad();
        y = y * 10 + (s[i] - '0');
    }
    for (int i = 5; i < 7; ++i) {
        if (s[i] < '0' || s[i] > '9') bad();
        m = m * 10 + unsigned(s[i] - '0');
    }
    for (int i = 8; i < 10; ++i) {
        if (s[i] < '0' || s[i] > '9') bad();
        d = d * 10 + unsigned(s[i] - '0');
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) bad();
    return Date{ymd};
}

inline std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

inline long days_between(Date a, Date b) { return (b - a).count(); }

inline bool is_weekend(Date d) {
    std::chrono::weekday wd{d};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

// Mon-Fri calendar; no holiday table.
inline Date subtract_business_days(Date d, int n) {
    while (n > 0) {
        d -= Days{1};
        if (!is_weekend(d)) --n;
    }
    return d;
}

}  // namespace asri
