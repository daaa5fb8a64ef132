#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace drsched {

using Timestamp = std::chrono::sys_seconds;
using DayId = std::chrono::sys_days;

struct IsoWeek {
    int year = 0;
    unsigned week = 0;
    friend bool operator==(const IsoWeek&, const IsoWeek&) = default;
};

/// ISO-8601 week: weeks start on Monday and week 1 contains the year's first Thursday.
inline IsoWeek iso_week(DayId day) {
    using namespace std::chrono;
    const unsigned iso_weekday = weekday{day}.iso_encoding(); // Mon=1 .. Sun=7
    const sys_days thursday = day + days{4 - static_cast<int>(iso_weekday)};
    const year iso_year = year_month_day{thursday}.year();
    const sys_days jan1 = sys_days{iso_year / January / 1};
    return {static_cast<int>(iso_year), static_cast<unsigned>((thursday - jan1).count() / 7 + 1)};
}

inline DayId day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

inline std::string format_day(DayId day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::string format_timestamp(Timestamp ts) {
    const DayId day = day_of(ts);
    const auto secs = (ts - day).count();
    return format_day(day) + fmt::format("T{:02}:{:02}", secs / 3600, (secs / 60) % 60);
}

inline std::optional<DayId> parse_day(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string s(text);
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return DayId{ymd};
}

/// Accepts YYYY-MM-DDTHH, YYYY-MM-DDTHH:MM and YYYY-MM-DDTHH:MM:SS, optionally
/// suffixed with 'Z'; a space may replace the 'T'.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (!text.empty() && text.back() == 'Z') {
        text.remove_suffix(1);
    }
    if (text.size() < 13 || (text[10] != 'T' && text[10] != ' ')) {
        return std::nullopt;
    }
    const auto day = parse_day(text.substr(0, 10));
    if (!day) {
        return std::nullopt;
    }
    const std::string clock(text.substr(11));
    unsigned hh = 0, mm = 0, ss = 0;
    int consumed = 0;
    bool ok = false;
    if (clock.size() == 2) {
        ok = std::sscanf(clock.c_str(), "%2u%n", &hh, &consumed) == 1;
    } else if (clock.size() == 5) {
        ok = std::sscanf(clock.c_str(), "%2u:%2u%n", &hh, &mm, &consumed) == 2;
    } else if (clock.size() == 8) {
        ok = std::sscanf(clock.c_str(), "%2u:%2u:%2u%n", &hh, &mm, &ss, &consumed) == 3;
    }
    if (!ok || consumed != static_cast<int>(clock.size()) || hh > 23 || mm > 59 || ss > 59) {
        return std::nullopt;
    }
    using namespace std::chrono;
    return Timestamp{*day} + hours{hh} + minutes{mm} + seconds{ss};
}

} // namespace drsched
