#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace mmstock {

using Date = std::chrono::year_month_day;

namespace detail {

inline bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Strict `YYYY-MM-DD`.
inline std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!detail::parse_fixed_int(s.substr(0, 4), y) || !detail::parse_fixed_int(s.substr(5, 2), m) ||
        !detail::parse_fixed_int(s.substr(8, 2), d))
        return std::nullopt;
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

/// ISO-8601 timestamp to its UTC calendar date. Accepts a bare date,
/// `YYYY-MM-DDTHH:MM[:SS[.fff]]` with optional `Z` or `+HH:MM` / `-HH:MM`
/// offset (also `+HHMM`). A missing offset is read as UTC.
inline std::optional<Date> parse_timestamp_utc_date(std::string_view s) {
    using namespace std::chrono;
    if (s.size() < 10) return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date) return std::nullopt;
    if (s.size() == 10) return date;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    std::string_view rest = s.substr(11);
    if (rest.size() < 5 || rest[2] != ':') return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!detail::parse_fixed_int(rest.substr(0, 2), hh) || !detail::parse_fixed_int(rest.substr(3, 2), mm))
        return std::nullopt;
    rest.remove_prefix(5);
    if (!rest.empty() && rest[0] == ':') {
        if (rest.size() < 3 || !detail::parse_fixed_int(rest.substr(1, 2), ss)) return std::nullopt;
        rest.remove_prefix(3);
        if (!rest.empty() && rest[0] == '.') {
            std::size_t i = 1;
            while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
            if (i == 1) return std::nullopt;
            rest.remove_prefix(i);
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    int offset_minutes = 0;
    if (rest == "Z" || rest.empty()) {
        offset_minutes = 0;
    } else if (rest[0] == '+' || rest[0] == '-') {
        int oh = 0, om = 0;
        std::string_view off = rest.substr(1);
        if (off.size() == 5 && off[2] == ':') {
            if (!detail::parse_fixed_int(off.substr(0, 2), oh) || !detail::parse_fixed_int(off.substr(3, 2), om))
                return std::nullopt;
        } else if (off.size() == 4) {
            if (!detail::parse_fixed_int(off.substr(0, 2), oh) || !detail::parse_fixed_int(off.substr(2, 2), om))
                return std::nullopt;
        } else {
            return std::nullopt;
        }
        offset_minutes = (rest[0] == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
        return std::nullopt;
    }
    auto local = sys_days{*date} + hours{hh} + minutes{mm} + seconds{ss};
    auto utc = local - minutes{offset_minutes};
    return Date{floor<days>(utc)};
}

}  // namespace mmstock
