#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>

namespace stockcast {

// Calendar dates as days since 1970-01-01 (Thursday).
using DaySerial = long;

inline DaySerial days_from_ymd(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    sys_days sd{year{y} / month{m} / day{d}};
    return static_cast<DaySerial>(sd.time_since_epoch().count());
}

inline void ymd_from_days(DaySerial serial, int& y, unsigned& m, unsigned& d) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{serial}}};
    y = static_cast<int>(ymd.year());
    m = static_cast<unsigned>(ymd.month());
    d = static_cast<unsigned>(ymd.day());
}

// 0 = Sunday .. 6 = Saturday.
inline int day_of_week(DaySerial serial) {
    return static_cast<int>(((serial % 7) + 11) % 7);
}

inline bool is_monday(DaySerial serial) {
    return day_of_week(serial) == 1;
}

// ISO-8601 week number. Weeks start on Monday; week 1 contains the year's
// first Thursday, so the week of any Monday is determined by its Thursday.
inline int iso_week(DaySerial monday_serial) {
    DaySerial thursday = monday_serial + 3;
    int y;
    unsigned m, d;
    ymd_from_days(thursday, y, m, d);
    DaySerial jan1 = days_from_ymd(y, 1, 1);
    int doy = static_cast<int>(thursday - jan1) + 1;
    return (doy - 1) / 7 + 1;
}

inline std::optional<DaySerial> parse_iso_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    DaySerial serial = days_from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    int ry;
    unsigned rm, rd;
    ymd_from_days(serial, ry, rm, rd);
    if (ry != y || rm != static_cast<unsigned>(m) || rd != static_cast<unsigned>(d)) return std::nullopt;
    return serial;
}

inline std::string format_iso_date(DaySerial serial) {
    int y;
    unsigned m, d;
    ymd_from_days(serial, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

} // namespace stockcast
