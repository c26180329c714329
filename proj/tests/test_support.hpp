#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "mmstock/ingest.hpp"

namespace mmstock::testing {

inline std::string fixture(const std::string& rel) { return std::string(MMSTOCK_FIXTURE_DIR) + "/" + rel; }
inline std::string source(const std::string& rel) { return std::string(MMSTOCK_SOURCE_DIR) + "/" + rel; }

inline Date ymd(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Consecutive calendar days starting 2023-01-02, one bar per (open, close).
inline std::vector<PriceBar> make_bars(const std::vector<std::pair<double, double>>& open_close) {
    std::vector<PriceBar> bars;
    auto day = std::chrono::sys_days{ymd(2023, 1, 2)};
    for (auto [o, c] : open_close) {
        PriceBar b;
        b.date = Date{day};
        b.open = o;
        b.close = c;
        b.adj_close = c;
        b.high = std::max(o, c);
        b.low = std::min(o, c);
        b.volume = 1000;
        bars.push_back(b);
        day += std::chrono::days{1};
    }
    return bars;
}

}  // namespace mmstock::testing
