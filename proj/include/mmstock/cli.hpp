#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmstock/config.hpp"
#include "mmstock/pipeline.hpp"

namespace mmstock::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kRuntimeError = 3 };

struct Overrides {
    std::string config;
    std::optional<std::string> feature_set;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> jobs;
};

inline ExperimentConfig resolve_config(const Overrides& o) {
    auto cfg = load_config(o.config);
    const auto cwd = std::filesystem::current_path();
    if (o.feature_set) set_config_value(cfg, "feature_sets", *o.feature_set, cwd);
    if (o.seed) set_config_value(cfg, "seed", std::to_string(*o.seed), cwd);
    if (o.replicates) set_config_value(cfg, "replicates", std::to_string(*o.replicates), cwd);
    if (o.out_dir) set_config_value(cfg, "out_dir", *o.out_dir, cwd);
    if (o.jobs) set_config_value(cfg, "jobs", std::to_string(*o.jobs), cwd);
    cfg.validate();
    return cfg;
}

inline void cmd_ingest(const ExperimentConfig& cfg, std::ostream& out) {
    auto ds = load_inputs(cfg);
    out << "stock: " << cfg.stock << '\n';
    out << "bars: " << ds.bars.size() << " (" << format_date(ds.bars.front().date) << " .. "
        << format_date(ds.bars.back().date) << ")\n";
    out << "tweets: " << ds.tweets.size() << " (assigned to trading days: " << ds.tweets_assigned << ")\n";
    out << "news: " << ds.news.size() << " (assigned to trading days: " << ds.news_assigned << ")\n";
    out << "provider: " << cfg.provider << '\n';
    if (cfg.provider == "external") {
        const auto path = std::filesystem::path(cfg.out_dir) / "external_request.json";
        detail::open_output(path) << build_external_request(cfg, ds).dump(2) << '\n';
        out << "external request: " << path.string() << '\n';
    } else {
        score_dataset(cfg, ds);
    }
    out << "config_hash: " << config_hash(cfg) << '\n';
}

inline void cmd_featurize(const ExperimentConfig& cfg, std::ostream& out) {
    const auto ds = load_dataset(cfg);
    const auto hash = config_hash(cfg);
    for (auto set : cfg.feature_sets) {
        auto a = featurize(cfg, ds, set);
        const auto path = std::filesystem::path(cfg.out_dir) / "features" / (std::string(to_string(set)) + ".csv");
        auto f = detail::open_output(path);
        f << detail::hash_comment(hash);
        write_feature_csv(f, a.normalized);
        out << to_string(set) << ": " << a.normalized.rows() << " rows x " << a.normalized.cols() << " features -> "
            << path.string() << '\n';
    }
}

inline ExperimentResults train_eval_and_write(const ExperimentConfig& cfg, const Dataset& ds, std::ostream& out) {
    auto res = run_train_eval(cfg, ds);
    write_train_eval_outputs(cfg, ds, res, cfg.save_checkpoints);
    out << "feature_set,r2_mean,mae_mean (normalized, " << cfg.replicates << " replicates)\n";
    for (const auto& r : res.sets)
        out << to_string(r.feature_set) << ',' << detail::format_double(r.normalized.r2_mean) << ','
            << detail::format_double(r.normalized.mae_mean) << '\n';
    out << "report: " << (std::filesystem::path(cfg.out_dir) / "report.json").string() << '\n';
    return res;
}

inline void cmd_train_eval(const ExperimentConfig& cfg, std::ostream& out) {
    const auto ds = load_dataset(cfg);
    train_eval_and_write(cfg, ds, out);
}

/// Simulates from out_dir/predictions/<set>.csv; sets without a predictions
/// file are trained first.
inline void cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
    namespace fs = std::filesystem;
    const auto ds = load_dataset(cfg);
    auto pred_path = [&](FeatureSet s) {
        return fs::path(cfg.out_dir) / "predictions" / (std::string(to_string(s)) + ".csv");
    };
    ExperimentConfig missing = cfg;
    missing.feature_sets.clear();
    for (auto s : cfg.feature_sets)
        if (!fs::exists(pred_path(s))) missing.feature_sets.push_back(s);
    if (!missing.feature_sets.empty()) {
        out << "training " << missing.feature_sets.size() << " feature set(s) without predictions\n";
        train_eval_and_write(missing, ds, out);
    }
    std::vector<FeatureSetSimulation> sims;
    for (auto s : cfg.feature_sets) sims.push_back(simulate_predictions(s, read_predictions_csv(pred_path(s).string()), ds, cfg.sim));
    write_simulation_outputs(cfg, ds, config_hash(cfg), sims);
    out << "feature_set,sentiment_provider,percent_gain_mean\n";
    for (const auto& s : sims)
        out << to_string(s.feature_set) << ',' << ds.provider_name << ',' << detail::format_double(s.percent_gain_mean)
            << '\n';
}

/// Parses `args` (without the program name), runs the command and maps
/// failures to exit codes: 2 for input/validation errors, 3 for runtime errors.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal stock forecasting: ingest, featurize, train-eval, simulate"};
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config file (key = value)")->required();
        sub->add_option("--feature-set", o.feature_set, "feature set name, comma list, or 'all'");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--replicates", o.replicates, "replicate runs per feature set");
        sub->add_option("--out-dir", o.out_dir, "output directory");
        sub->add_option("--jobs", o.jobs, "parallel training runs");
    };
    auto* ingest = app.add_subcommand("ingest", "validate inputs and print a summary");
    auto* featurize_cmd = app.add_subcommand("featurize", "write normalized feature matrices");
    auto* train_eval = app.add_subcommand("train-eval", "train replicates and write metric reports");
    auto* simulate = app.add_subcommand("simulate", "run the trading simulation over predictions");
    for (auto* sub : {ingest, featurize_cmd, train_eval, simulate}) add_common(sub);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    try {
        const auto cfg = resolve_config(o);
        if (ingest->parsed()) cmd_ingest(cfg, out);
        else if (featurize_cmd->parsed()) cmd_featurize(cfg, out);
        else if (train_eval->parsed()) cmd_train_eval(cfg, out);
        else if (simulate->parsed()) cmd_simulate(cfg, out);
        return kOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace mmstock::cli
