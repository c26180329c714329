#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mmstock/date.hpp"
#include "mmstock/error.hpp"

namespace mmstock {

/// One trading day of OHLCV data.
struct PriceBar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double adj_close = 0.0;
    std::int64_t volume = 0;

    friend bool operator==(const PriceBar&, const PriceBar&) = default;
};

enum class PostKind { tweet, news };

inline std::string_view to_string(PostKind k) { return k == PostKind::tweet ? "tweet" : "news"; }

/// A tweet or news item with its engagement counts. All four counts are zero
/// for news.
struct RawPost {
    std::string id;
    Date date;  // UTC calendar date of the timestamp
    std::string timestamp;
    std::string text;
    std::int64_t retweets = 0;
    std::int64_t likes = 0;
    std::int64_t comments = 0;
    std::int64_t followers = 0;
    PostKind kind = PostKind::tweet;
};

/// Ordered trading dates, taken from a validated price series.
class TradingCalendar {
public:
    TradingCalendar() = default;

    explicit TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
        for (std::size_t i = 1; i < dates_.size(); ++i)
            if (!(dates_[i - 1] < dates_[i])) throw NonMonotonicDate(format_date(dates_[i]));
    }

    static TradingCalendar from_bars(const std::vector<PriceBar>& bars) {
        std::vector<Date> dates;
        dates.reserve(bars.size());
        for (const auto& b : bars) dates.push_back(b.date);
        return TradingCalendar(std::move(dates));
    }

    const std::vector<Date>& dates() const noexcept { return dates_; }
    std::size_t size() const noexcept { return dates_.size(); }
    bool empty() const noexcept { return dates_.empty(); }
    const Date& operator[](std::size_t i) const { return dates_[i]; }

    std::optional<std::size_t> index_of(const Date& d) const {
        auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
        if (it == dates_.end() || *it != d) return std::nullopt;
        return static_cast<std::size_t>(it - dates_.begin());
    }

    bool contains(const Date& d) const { return index_of(d).has_value(); }

    /// First trading date on or after `d`; nullopt past the end of the calendar.
    std::optional<std::size_t> next_trading_index(const Date& d) const {
        auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
        if (it == dates_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - dates_.begin());
    }

private:
    std::vector<Date> dates_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

}  // namespace detail

inline constexpr std::string_view kPriceCsvHeader = "Date,Open,High,Low,Close,Adj Close,Volume";

/// Parses the price CSV schema. Bars must already be in ascending date order.
inline std::vector<PriceBar> parse_price_csv(std::istream& in) {
    static const char* kColumns[] = {"Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"};
    std::string line;
    if (!std::getline(in, line)) throw MissingColumn("Date");
    auto header = detail::split_csv_line(line);
    std::size_t col[7];
    for (std::size_t k = 0; k < 7; ++k) {
        auto it = std::find_if(header.begin(), header.end(),
                               [&](const std::string& h) { return detail::trim(h) == kColumns[k]; });
        if (it == header.end()) throw MissingColumn(kColumns[k]);
        col[k] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<PriceBar> bars;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw UnparsableRow(lineno, "expected " + std::to_string(header.size()) + " cells, got " +
                                            std::to_string(cells.size()));
        auto cell = [&](std::size_t k) { return detail::trim(cells[col[k]]); };

        auto date = parse_date(cell(0));
        if (!date) throw UnparsableRow(lineno, "bad date '" + cell(0) + "'");
        double prices[5];
        for (std::size_t k = 0; k < 5; ++k) {
            auto v = detail::parse_double(cell(k + 1));
            if (!v) throw UnparsableRow(lineno, std::string("bad ") + kColumns[k + 1] + " '" + cell(k + 1) + "'");
            prices[k] = *v;
        }
        auto volume = detail::parse_int(cell(6));
        if (!volume) throw UnparsableRow(lineno, "bad Volume '" + cell(6) + "'");

        PriceBar bar{*date, prices[0], prices[1], prices[2], prices[3], prices[4], *volume};
        for (double p : prices)
            if (!(p > 0.0)) throw UnparsableRow(lineno, "prices must be positive");
        if (bar.volume < 0) throw UnparsableRow(lineno, "negative volume");
        if (!(bar.low <= bar.open && bar.open <= bar.high && bar.low <= bar.close && bar.close <= bar.high))
            throw UnparsableRow(lineno, "open/close outside [low, high]");

        if (!bars.empty()) {
            if (bars.back().date == bar.date) throw DuplicateDate(format_date(bar.date));
            if (bar.date < bars.back().date) throw NonMonotonicDate(format_date(bar.date));
        }
        bars.push_back(bar);
    }
    return bars;
}

inline std::vector<PriceBar> load_price_csv(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_price_csv(in);
}

inline void write_price_csv(std::ostream& out, const std::vector<PriceBar>& bars) {
    out << kPriceCsvHeader << '\n';
    for (const auto& b : bars) {
        out << format_date(b.date) << ',' << detail::format_double(b.open) << ','
            << detail::format_double(b.high) << ',' << detail::format_double(b.low) << ','
            << detail::format_double(b.close) << ',' << detail::format_double(b.adj_close) << ',' << b.volume
            << '\n';
    }
}

struct PostLoadOptions {
    // Re-applies the collection-time engagement filter to tweets.
    std::optional<std::int64_t> min_likes;
};

/// Parses one-JSON-object-per-line posts. Duplicate ids keep the first
/// occurrence. A line whose `kind` disagrees with `kind` is rejected.
inline std::vector<RawPost> parse_posts_jsonl(std::istream& in, PostKind kind, const PostLoadOptions& opts = {}) {
    using nlohmann::json;
    std::vector<RawPost> posts;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw UnparsableLine(lineno, e.what());
        }
        if (!obj.is_object()) throw UnparsableLine(lineno, "not a JSON object");

        auto require_string = [&](const char* name) -> std::string {
            auto it = obj.find(name);
            if (it == obj.end() || it->is_null()) throw MissingField(name, lineno);
            if (!it->is_string()) throw UnparsableLine(lineno, std::string("field '") + name + "' must be a string");
            return it->get<std::string>();
        };
        auto count = [&](const char* name) -> std::int64_t {
            auto it = obj.find(name);
            if (it == obj.end() || it->is_null()) {
                if (kind == PostKind::news) return 0;
                throw MissingField(name, lineno);
            }
            if (!it->is_number_integer()) throw UnparsableLine(lineno, std::string("field '") + name + "' must be an integer");
            auto v = it->get<std::int64_t>();
            if (v < 0) throw UnparsableLine(lineno, std::string("field '") + name + "' must be non-negative");
            return v;
        };

        RawPost p;
        p.kind = kind;
        if (auto it = obj.find("kind"); it != obj.end() && !it->is_null()) {
            if (!it->is_string() || (it->get<std::string>() != "tweet" && it->get<std::string>() != "news"))
                throw UnparsableLine(lineno, "kind must be \"tweet\" or \"news\"");
            if (it->get<std::string>() != to_string(kind))
                throw UnparsableLine(lineno, "kind '" + it->get<std::string>() + "' in a " +
                                                 std::string(to_string(kind)) + " file");
        }
        p.id = require_string("id");
        p.timestamp = require_string("ts");
        p.text = require_string("text");
        auto date = parse_timestamp_utc_date(p.timestamp);
        if (!date) throw UnparsableLine(lineno, "bad timestamp '" + p.timestamp + "'");
        p.date = *date;
        p.retweets = count("retweets");
        p.likes = count("likes");
        p.comments = count("comments");
        p.followers = count("followers");
        if (kind == PostKind::news && (p.retweets || p.likes || p.comments || p.followers))
            throw UnparsableLine(lineno, "news records carry no engagement counts");

        if (!seen.insert(p.id).second) continue;
        if (kind == PostKind::tweet && opts.min_likes && p.likes < *opts.min_likes) continue;
        posts.push_back(std::move(p));
    }
    return posts;
}

inline std::vector<RawPost> load_posts_jsonl(const std::string& path, PostKind kind, const PostLoadOptions& opts = {}) {
    auto in = detail::open_input(path);
    return parse_posts_jsonl(in, kind, opts);
}

/// A post mapped onto the trading day it first becomes usable.
struct AssignedPost {
    std::size_t day;  // index into the calendar
    const RawPost* post;
};

/// Posts on non-trading days move to the next trading day; posts after the
/// last trading day are dropped.
inline std::vector<AssignedPost> assign_to_trading_days(const TradingCalendar& calendar,
                                                        const std::vector<RawPost>& posts) {
    std::vector<AssignedPost> out;
    out.reserve(posts.size());
    for (const auto& p : posts)
        if (auto idx = calendar.next_trading_index(p.date)) out.push_back({*idx, &p});
    return out;
}

/// Maps every calendar date to the most recent observation on or before it.
template <typename T>
std::map<Date, T> forward_fill(const TradingCalendar& calendar, const std::map<Date, T>& series,
                               std::optional<T> initial = std::nullopt) {
    std::map<Date, T> out;
    std::optional<T> last = std::move(initial);
    auto it = series.begin();
    for (const auto& d : calendar.dates()) {
        while (it != series.end() && !(d < it->first)) {
            last = it->second;
            ++it;
        }
        if (!last) throw NoPriorValue(format_date(d));
        out.emplace(d, *last);
    }
    return out;
}

}  // namespace mmstock
