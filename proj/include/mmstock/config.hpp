#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmstock/date.hpp"
#include "mmstock/error.hpp"
#include "mmstock/features.hpp"
#include "mmstock/forecaster.hpp"
#include "mmstock/ingest.hpp"
#include "mmstock/market_sim.hpp"
#include "mmstock/sentiment.hpp"

namespace mmstock {

/// Every knob of one experiment. Paths are resolved against the directory of
/// the config file they came from.
struct ExperimentConfig {
    std::string stock = "STOCK";
    std::string prices;
    std::string tweets;
    std::string news;
    std::string stopwords;
    std::string provider = "lexicon";  // lexicon | replay | external
    std::string lexicon;
    std::string replay_scores;
    std::string external_response;
    std::string prompt_template;
    bool keep_cashtags = true;
    std::optional<std::int64_t> min_likes;
    WeightParams weights;
    std::size_t rsi_period = 14;
    std::size_t sma_period = 14;
    LstmConfig lstm;
    Date split_date = Date{std::chrono::year{2022}, std::chrono::December, std::chrono::day{31}};
    std::size_t replicates = 10;
    SimConfig sim;
    std::vector<FeatureSet> feature_sets{kAllFeatureSets.begin(), kAllFeatureSets.end()};
    std::string out_dir = "out";
    std::size_t jobs = 1;
    bool save_checkpoints = false;

    // Canonical key=value text (sorted keys, values as given) the hash is taken over.
    std::map<std::string, std::string> raw;

    void validate() const {
        if (prices.empty()) throw InputError("config: 'prices' is required");
        if (provider != "lexicon" && provider != "replay" && provider != "external")
            throw InputError("config: provider must be lexicon, replay or external");
        if (replicates == 0) throw InputError("config: replicates must be >= 1");
        if (jobs == 0) throw InputError("config: jobs must be >= 1");
        if (feature_sets.empty()) throw InputError("config: no feature sets selected");
        weights.validate();
        lstm.validate();
        sim.validate();
    }
};

namespace detail {

inline std::string valid_feature_set_names() {
    std::string s;
    for (auto f : kAllFeatureSets) {
        if (!s.empty()) s += ", ";
        s += to_string(f);
    }
    return s;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

inline std::vector<FeatureSet> parse_feature_set_list(const std::string& value) {
    if (detail::trim(value) == "all") return {kAllFeatureSets.begin(), kAllFeatureSets.end()};
    std::vector<FeatureSet> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        auto fs = parse_feature_set(item);
        if (!fs) throw InputError("unknown feature set '" + item + "'; valid names: " + detail::valid_feature_set_names());
        out.push_back(*fs);
    }
    return out;
}

/// Applies one key to the config. Unknown keys are an error.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                             const std::filesystem::path& base_dir) {
    auto path = [&](const std::string& v) -> std::string {
        if (v.empty()) return v;
        std::filesystem::path p(v);
        return (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
    };
    auto to_size = [&](const std::string& v) -> std::size_t {
        auto n = detail::parse_int(v);
        if (!n || *n < 0) throw InputError("config: '" + key + "' must be a non-negative integer, got '" + v + "'");
        return static_cast<std::size_t>(*n);
    };
    auto to_double = [&](const std::string& v) -> double {
        auto d = detail::parse_double(v);
        if (!d) throw InputError("config: '" + key + "' must be a number, got '" + v + "'");
        return *d;
    };
    auto to_bool = [&](const std::string& v) -> bool {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw InputError("config: '" + key + "' must be true or false, got '" + v + "'");
    };

    if (key == "stock") cfg.stock = value;
    else if (key == "prices") cfg.prices = path(value);
    else if (key == "tweets") cfg.tweets = path(value);
    else if (key == "news") cfg.news = path(value);
    else if (key == "stopwords") cfg.stopwords = path(value);
    else if (key == "provider") cfg.provider = value;
    else if (key == "lexicon") cfg.lexicon = path(value);
    else if (key == "replay_scores") cfg.replay_scores = path(value);
    else if (key == "external_response") cfg.external_response = path(value);
    else if (key == "prompt_template") cfg.prompt_template = path(value);
    else if (key == "keep_cashtags") cfg.keep_cashtags = to_bool(value);
    else if (key == "min_likes") cfg.min_likes = value.empty() ? std::nullopt : std::optional<std::int64_t>(to_size(value));
    else if (key == "alpha") cfg.weights.alpha = to_double(value);
    else if (key == "beta") cfg.weights.beta = to_double(value);
    else if (key == "gamma") cfg.weights.gamma = to_double(value);
    else if (key == "delta") cfg.weights.delta = to_double(value);
    else if (key == "rsi_period") cfg.rsi_period = to_size(value);
    else if (key == "sma_period") cfg.sma_period = to_size(value);
    else if (key == "lookback") cfg.lstm.lookback = to_size(value);
    else if (key == "hidden_units") cfg.lstm.hidden_units = to_size(value);
    else if (key == "learning_rate") cfg.lstm.learning_rate = to_double(value);
    else if (key == "batch_size") cfg.lstm.batch_size = to_size(value);
    else if (key == "epochs") cfg.lstm.epochs = to_size(value);
    else if (key == "grad_clip_norm") cfg.lstm.grad_clip_norm = to_double(value);
    else if (key == "seed") {
        auto n = detail::parse_int(value);
        if (!n || *n < 0) throw InputError("config: 'seed' must be a non-negative integer");
        cfg.lstm.seed = static_cast<std::uint64_t>(*n);
    } else if (key == "split_date") {
        auto d = parse_date(value);
        if (!d) throw InputError("config: 'split_date' must be YYYY-MM-DD");
        cfg.split_date = *d;
    } else if (key == "replicates") cfg.replicates = to_size(value);
    else if (key == "initial_capital") cfg.sim.initial_capital = to_double(value);
    else if (key == "profit_threshold") cfg.sim.profit_threshold = to_double(value);
    else if (key == "dip_threshold") cfg.sim.dip_threshold = to_double(value);
    else if (key == "carry_rules") cfg.sim.carry_rules = to_bool(value);
    else if (key == "feature_sets") cfg.feature_sets = parse_feature_set_list(value);
    else if (key == "out_dir") cfg.out_dir = path(value);
    else if (key == "jobs") cfg.jobs = to_size(value);
    else if (key == "save_checkpoints") cfg.save_checkpoints = to_bool(value);
    else throw InputError("config: unknown key '" + key + "'");

    // Paths are hashed as written. `jobs`, `out_dir` and `save_checkpoints` are not hashed.
    if (key != "jobs" && key != "out_dir" && key != "save_checkpoints") cfg.raw[key] = value;
}

/// Flat `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    cfg.out_dir = (base_dir / "out").lexically_normal().string();
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw UnparsableLine(lineno, "expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw UnparsableLine(lineno, "duplicate key '" + key + "'");
        set_config_value(cfg, key, value, base_dir);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    auto base = std::filesystem::path(path).parent_path();
    return parse_config(in, base.empty() ? std::filesystem::path(".") : base);
}

/// 16 hex digits of FNV-1a over the canonical key=value text.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::string canon;
    for (const auto& [k, v] : cfg.raw) canon += k + "=" + v + "\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a64(canon)));
    return buf;
}

}  // namespace mmstock
