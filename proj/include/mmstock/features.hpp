#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmstock/error.hpp"
#include "mmstock/ingest.hpp"
#include "mmstock/sentiment.hpp"

namespace mmstock {

// ---- feature sets ---------------------------------------------------------

enum class FeatureSet {
    Prices,
    PricesRsiSma,
    PricesNews,
    PricesNewsRsiSma,
    PricesTweets,
    PricesTweetsRsiSma,
    PricesTweetsNews,
    PricesTweetsNewsRsiSma,
    PricesWeightedTweets,
    PricesWeightedTweetsRsiSma,
    PricesWeightedTweetsNews,
    PricesWeightedTweetsNewsRsiSma,
};

inline constexpr std::array<FeatureSet, 12> kAllFeatureSets = {
    FeatureSet::Prices,
    FeatureSet::PricesRsiSma,
    FeatureSet::PricesNews,
    FeatureSet::PricesNewsRsiSma,
    FeatureSet::PricesTweets,
    FeatureSet::PricesTweetsRsiSma,
    FeatureSet::PricesTweetsNews,
    FeatureSet::PricesTweetsNewsRsiSma,
    FeatureSet::PricesWeightedTweets,
    FeatureSet::PricesWeightedTweetsRsiSma,
    FeatureSet::PricesWeightedTweetsNews,
    FeatureSet::PricesWeightedTweetsNewsRsiSma,
};

inline std::string_view to_string(FeatureSet s) {
    switch (s) {
        case FeatureSet::Prices: return "Prices";
        case FeatureSet::PricesRsiSma: return "Prices-RSI-SMA";
        case FeatureSet::PricesNews: return "Prices-News";
        case FeatureSet::PricesNewsRsiSma: return "Prices-News-RSI-SMA";
        case FeatureSet::PricesTweets: return "Prices-Tweets";
        case FeatureSet::PricesTweetsRsiSma: return "Prices-Tweets-RSI-SMA";
        case FeatureSet::PricesTweetsNews: return "Prices-Tweets-News";
        case FeatureSet::PricesTweetsNewsRsiSma: return "Prices-Tweets-News-RSI-SMA";
        case FeatureSet::PricesWeightedTweets: return "Prices-Weighted-Tweets";
        case FeatureSet::PricesWeightedTweetsRsiSma: return "Prices-Weighted-Tweets-RSI-SMA";
        case FeatureSet::PricesWeightedTweetsNews: return "Prices-Weighted-Tweets-News";
        case FeatureSet::PricesWeightedTweetsNewsRsiSma: return "Prices-Weighted-Tweets-News-RSI-SMA";
    }
    return "";
}

inline std::optional<FeatureSet> parse_feature_set(std::string_view name) {
    for (auto s : kAllFeatureSets)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

struct FeatureSetParts {
    bool tweets = false;
    bool weighted_tweets = false;
    bool news = false;
    bool indicators = false;
};

inline FeatureSetParts parts_of(FeatureSet s) {
    const std::string_view n = to_string(s);
    FeatureSetParts p;
    p.weighted_tweets = n.find("Weighted-Tweets") != std::string_view::npos;
    p.tweets = !p.weighted_tweets && n.find("Tweets") != std::string_view::npos;
    p.news = n.find("News") != std::string_view::npos;
    p.indicators = n.find("RSI-SMA") != std::string_view::npos;
    return p;
}

/// Column order: prices, tweet block, news block, indicators.
inline std::vector<std::string> feature_columns(FeatureSet s) {
    std::vector<std::string> cols = {"open", "high", "low", "close", "adj_close", "volume"};
    const auto p = parts_of(s);
    if (p.tweets) cols.insert(cols.end(), {"tweet_mean_label", "tweet_mean_conf", "tweet_count"});
    if (p.weighted_tweets) cols.insert(cols.end(), {"tweet_mean_ws", "tweet_count"});
    if (p.news) cols.insert(cols.end(), {"news_mean_label", "news_mean_conf", "news_count"});
    if (p.indicators) cols.insert(cols.end(), {"rsi", "sma"});
    return cols;
}

// ---- indicators -----------------------------------------------------------

/// Rolling mean; the first period-1 entries repeat the first full-window value.
inline std::vector<double> sma(std::span<const double> closes, std::size_t period) {
    if (period == 0) throw InputError("SMA period must be positive");
    if (closes.size() < period) throw SeriesTooShort(closes.size(), period);
    std::vector<double> out(closes.size());
    for (std::size_t t = period - 1; t < closes.size(); ++t) {
        double s = 0.0;
        for (std::size_t k = t + 1 - period; k <= t; ++k) s += closes[k];
        out[t] = s / static_cast<double>(period);
    }
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(period - 1), out[period - 1]);
    return out;
}

/// Wilder RSI. Seeded with the simple mean of the first `period` deltas, then
/// avg = (prev * (period - 1) + current) / period. Entries before index
/// `period` are filled with 50.
inline std::vector<double> rsi(std::span<const double> closes, std::size_t period) {
    if (period == 0) throw InputError("RSI period must be positive");
    if (closes.size() < period + 1) throw SeriesTooShort(closes.size(), period + 1);
    const auto p = static_cast<double>(period);
    auto value = [](double gain, double loss) {
        if (gain == 0.0 && loss == 0.0) return 50.0;
        if (loss == 0.0) return 100.0;
        if (gain == 0.0) return 0.0;
        return 100.0 - 100.0 / (1.0 + gain / loss);
    };
    std::vector<double> out(closes.size(), 50.0);
    double gain = 0.0, loss = 0.0;
    for (std::size_t k = 1; k <= period; ++k) {
        const double d = closes[k] - closes[k - 1];
        if (d > 0) gain += d;
        else loss -= d;
    }
    gain /= p;
    loss /= p;
    out[period] = value(gain, loss);
    for (std::size_t t = period + 1; t < closes.size(); ++t) {
        const double d = closes[t] - closes[t - 1];
        gain = (gain * (p - 1.0) + (d > 0 ? d : 0.0)) / p;
        loss = (loss * (p - 1.0) + (d < 0 ? -d : 0.0)) / p;
        out[t] = value(gain, loss);
    }
    return out;
}

struct Indicators {
    std::vector<double> rsi;
    std::vector<double> sma;
};

inline Indicators compute_indicators(const std::vector<PriceBar>& bars, std::size_t rsi_period = 14,
                                     std::size_t sma_period = 14) {
    std::vector<double> closes;
    closes.reserve(bars.size());
    for (const auto& b : bars) closes.push_back(b.close);
    return {rsi(closes, rsi_period), sma(closes, sma_period)};
}

// ---- min-max normalization ------------------------------------------------

/// Per-column (min, max) fitted on the training rows.
struct NormalizationState {
    std::vector<double> min;
    std::vector<double> max;

    double transform(std::size_t col, double x) const {
        const double range = max[col] - min[col];
        return range == 0.0 ? 0.0 : (x - min[col]) / range;
    }
    double invert(std::size_t col, double y) const { return min[col] + y * (max[col] - min[col]); }
};

inline NormalizationState minmax_fit(const std::vector<std::vector<double>>& columns) {
    NormalizationState st;
    for (const auto& c : columns) {
        if (c.empty()) throw EmptyColumn("cannot fit min-max on an empty column");
        auto [lo, hi] = std::minmax_element(c.begin(), c.end());
        st.min.push_back(*lo);
        st.max.push_back(*hi);
    }
    return st;
}

inline double minmax_transform(const NormalizationState& st, std::size_t col, double x) { return st.transform(col, x); }
inline double minmax_invert(const NormalizationState& st, std::size_t col, double y) { return st.invert(col, y); }

// ---- feature matrix -------------------------------------------------------

struct FeatureMatrix {
    FeatureSet feature_set = FeatureSet::Prices;
    std::vector<Date> dates;
    std::vector<std::string> columns;
    std::vector<double> values;  // row-major, dates.size() x columns.size()

    std::size_t rows() const noexcept { return dates.size(); }
    std::size_t cols() const noexcept { return columns.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

    std::size_t column_index(std::string_view name) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return c;
        throw InputError("no column '" + std::string(name) + "'");
    }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
        return out;
    }
};

/// Everything `assemble` needs, aligned to one trading calendar. Sentiment
/// series may be empty when the feature set does not use them.
struct FeatureInputs {
    const std::vector<PriceBar>* bars = nullptr;
    const std::vector<DailySentiment>* tweets = nullptr;
    const std::vector<DailySentiment>* news = nullptr;
    const Indicators* indicators = nullptr;
};

/// Unnormalized matrix for `set` in the documented column order.
inline FeatureMatrix assemble_raw(FeatureSet set, const FeatureInputs& in) {
    if (!in.bars) throw InputError("price bars required");
    const auto& bars = *in.bars;
    const auto parts = parts_of(set);
    auto check_daily = [&](const std::vector<DailySentiment>* d, const char* what) {
        if (!d) throw InputError(std::string(what) + " sentiment required for " + std::string(to_string(set)));
        if (d->size() != bars.size())
            throw MisalignedInputs(d->empty() ? std::string("<empty>")
                                              : format_date(d->size() < bars.size() ? bars[d->size()].date
                                                                                    : (*d)[bars.size()].date));
        for (std::size_t i = 0; i < bars.size(); ++i)
            if ((*d)[i].date != bars[i].date) throw MisalignedInputs(format_date(bars[i].date));
    };
    if (parts.tweets || parts.weighted_tweets) check_daily(in.tweets, "tweet");
    if (parts.news) check_daily(in.news, "news");
    if (parts.indicators) {
        if (!in.indicators) throw InputError("indicators required");
        if (in.indicators->rsi.size() != bars.size() || in.indicators->sma.size() != bars.size())
            throw MisalignedInputs(bars.empty() ? std::string("<empty>") : format_date(bars.back().date));
    }

    FeatureMatrix m;
    m.feature_set = set;
    m.columns = feature_columns(set);
    m.dates.reserve(bars.size());
    m.values.reserve(bars.size() * m.columns.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& b = bars[i];
        m.dates.push_back(b.date);
        m.values.insert(m.values.end(),
                        {b.open, b.high, b.low, b.close, b.adj_close, static_cast<double>(b.volume)});
        if (parts.tweets) {
            const auto& t = (*in.tweets)[i];
            m.values.insert(m.values.end(), {t.mean_label, t.mean_conf, static_cast<double>(t.count)});
        }
        if (parts.weighted_tweets) {
            const auto& t = (*in.tweets)[i];
            m.values.insert(m.values.end(), {t.mean_ws, static_cast<double>(t.count)});
        }
        if (parts.news) {
            const auto& n = (*in.news)[i];
            m.values.insert(m.values.end(), {n.mean_label, n.mean_conf, static_cast<double>(n.count)});
        }
        if (parts.indicators) m.values.insert(m.values.end(), {in.indicators->rsi[i], in.indicators->sma[i]});
    }
    return m;
}

/// Number of leading rows dated on or before `split_date`.
inline std::size_t training_rows(const FeatureMatrix& m, const Date& split_date) {
    return static_cast<std::size_t>(std::upper_bound(m.dates.begin(), m.dates.end(), split_date) - m.dates.begin());
}

/// Fits min-max on rows dated <= split_date and applies it to every row.
/// Test rows may land outside [0, 1]; they are not clipped.
inline std::pair<FeatureMatrix, NormalizationState> normalize(const FeatureMatrix& raw, const Date& split_date) {
    const std::size_t n_train = training_rows(raw, split_date);
    std::vector<std::vector<double>> train_cols(raw.cols());
    for (std::size_t c = 0; c < raw.cols(); ++c) {
        train_cols[c].reserve(n_train);
        for (std::size_t r = 0; r < n_train; ++r) train_cols[c].push_back(raw.at(r, c));
    }
    auto state = minmax_fit(train_cols);
    FeatureMatrix out = raw;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = state.transform(c, raw.at(r, c));
    return {std::move(out), std::move(state)};
}

struct AssembledFeatures {
    FeatureMatrix raw;
    FeatureMatrix normalized;
    NormalizationState state;
};

inline AssembledFeatures assemble(FeatureSet set, const FeatureInputs& in, const Date& split_date) {
    AssembledFeatures a;
    a.raw = assemble_raw(set, in);
    auto [norm, state] = normalize(a.raw, split_date);
    a.normalized = std::move(norm);
    a.state = std::move(state);
    return a;
}

/// CSV with `date` first and the matrix columns in order.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "date";
    for (const auto& c : m.columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << format_date(m.dates[r]);
        for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << detail::format_double(m.at(r, c));
        out << '\n';
    }
}

// ---- windowing ------------------------------------------------------------

/// Supervised samples: X is lookback x n_features (row-major), y is the
/// normalized close on the target row.
struct WindowedDataset {
    std::size_t lookback = 0;
    std::size_t n_features = 0;
    std::vector<double> inputs;
    std::vector<double> targets;
    std::vector<Date> target_dates;
    std::vector<std::size_t> target_rows;  // row index of each target in the source matrix

    std::size_t size() const noexcept { return targets.size(); }
    bool empty() const noexcept { return targets.empty(); }
    std::size_t sample_width() const noexcept { return lookback * n_features; }
    std::span<const double> sample(std::size_t i) const {
        return {inputs.data() + i * sample_width(), sample_width()};
    }
};

struct WindowSplit {
    WindowedDataset train;
    WindowedDataset test;
};

/// Sample t reads rows [t - lookback, t) and predicts the close on row t.
/// Train targets are dated <= split_date, test targets after it; test
/// windows may read the tail of the training span as context.
inline WindowSplit make_windows(const FeatureMatrix& m, std::size_t lookback, const Date& split_date,
                                std::string_view target_column = "close") {
    if (lookback == 0) throw InputError("lookback must be positive");
    const std::size_t n_train = training_rows(m, split_date);
    if (lookback >= n_train)
        throw InsufficientHistory("lookback " + std::to_string(lookback) + " needs more than " +
                                  std::to_string(n_train) + " training rows");
    const std::size_t target_col = m.column_index(target_column);

    auto fill = [&](WindowedDataset& ds, std::size_t first, std::size_t last) {
        ds.lookback = lookback;
        ds.n_features = m.cols();
        for (std::size_t t = first; t < last; ++t) {
            ds.inputs.insert(ds.inputs.end(), m.values.begin() + static_cast<std::ptrdiff_t>((t - lookback) * m.cols()),
                             m.values.begin() + static_cast<std::ptrdiff_t>(t * m.cols()));
            ds.targets.push_back(m.at(t, target_col));
            ds.target_dates.push_back(m.dates[t]);
            ds.target_rows.push_back(t);
        }
    };
    WindowSplit split;
    fill(split.train, lookback, n_train);
    fill(split.test, n_train, m.rows());
    return split;
}

}  // namespace mmstock
