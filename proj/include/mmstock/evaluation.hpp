#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmstock/error.hpp"
#include "mmstock/features.hpp"

namespace mmstock {

enum class MetricScale { normalized, denormalized };

inline std::string_view to_string(MetricScale s) {
    return s == MetricScale::normalized ? "normalized" : "denormalized";
}

/// 1 - SS_res / SS_tot. Throws ConstantTarget rather than inventing a value.
inline double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch(y_true.size(), y_pred.size());
    if (y_true.size() < 2) throw InputError("R^2 needs at least two points");
    double mean = 0.0;
    for (double y : y_true) mean += y;
    mean /= static_cast<double>(y_true.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = 0; k < y_true.size(); ++k) {
        const double r = y_true[k] - y_pred[k];
        const double d = y_true[k] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) throw ConstantTarget();
    return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch(y_true.size(), y_pred.size());
    if (y_true.empty()) throw InputError("MAE of an empty series");
    double s = 0.0;
    for (std::size_t k = 0; k < y_true.size(); ++k) s += std::fabs(y_true[k] - y_pred[k]);
    return s / static_cast<double>(y_true.size());
}

struct RunMetrics {
    FeatureSet feature_set = FeatureSet::Prices;
    std::uint64_t seed = 0;
    double r2 = 0.0;
    double mae = 0.0;
    MetricScale scale = MetricScale::normalized;
};

inline RunMetrics evaluate_run(FeatureSet set, std::uint64_t seed, std::span<const double> y_true,
                               std::span<const double> y_pred, MetricScale scale) {
    return {set, seed, r_squared(y_true, y_pred), mae(y_true, y_pred), scale};
}

struct AggregateReport {
    FeatureSet feature_set = FeatureSet::Prices;
    MetricScale scale = MetricScale::normalized;
    std::size_t replicates = 0;
    double r2_mean = 0.0;
    double mae_mean = 0.0;
    std::vector<double> r2_runs;
    std::vector<double> mae_runs;
    std::vector<std::uint64_t> seeds;
};

/// Arithmetic means over replicate runs that share a feature set and scale.
inline AggregateReport replicate_average(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw InputError("no runs to average");
    AggregateReport rep;
    rep.feature_set = runs.front().feature_set;
    rep.scale = runs.front().scale;
    rep.replicates = runs.size();
    for (const auto& r : runs) {
        if (r.feature_set != rep.feature_set || r.scale != rep.scale)
            throw MixedFeatureSets("runs mix feature sets or metric scales");
        rep.r2_runs.push_back(r.r2);
        rep.mae_runs.push_back(r.mae);
        rep.seeds.push_back(r.seed);
    }
    auto mean_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    rep.r2_mean = mean_of(rep.r2_runs);
    rep.mae_mean = mean_of(rep.mae_runs);
    return rep;
}

}  // namespace mmstock
