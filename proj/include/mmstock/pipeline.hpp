#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mmstock/config.hpp"
#include "mmstock/evaluation.hpp"
#include "mmstock/features.hpp"
#include "mmstock/forecaster.hpp"
#include "mmstock/ingest.hpp"
#include "mmstock/market_sim.hpp"
#include "mmstock/sentiment.hpp"
#include "mmstock/textprep.hpp"

namespace mmstock {

/// Loaded, scored and calendar-aligned inputs for one stock.
struct Dataset {
    std::vector<PriceBar> bars;
    TradingCalendar calendar;
    std::vector<RawPost> tweets;
    std::vector<RawPost> news;
    std::size_t tweets_assigned = 0;
    std::size_t news_assigned = 0;
    std::vector<DailySentiment> tweet_daily;
    std::vector<DailySentiment> news_daily;
    std::string provider_name;
};

/// External-service responses keyed by post id: `{"items": [{"id", "label", "score"}, ...]}`.
inline ScoreTable external_scores_by_id(const nlohmann::json& response) {
    auto scores = parse_external_response(response);
    const auto& rows = response.is_object() ? response.at("items") : response;
    ScoreTable table;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto id = rows[i].find("id");
        if (id == rows[i].end() || !id->is_string()) throw MalformedResponse(i, "missing id");
        table.emplace(id->get<std::string>(), scores[i]);
    }
    return table;
}

inline std::unique_ptr<SentimentProvider> make_provider(const ExperimentConfig& cfg) {
    if (cfg.provider == "lexicon") {
        if (cfg.lexicon.empty()) throw InputError("config: provider 'lexicon' needs 'lexicon'");
        return std::make_unique<LexiconProvider>(load_lexicon(cfg.lexicon));
    }
    if (cfg.provider == "replay") {
        if (cfg.replay_scores.empty()) throw InputError("config: provider 'replay' needs 'replay_scores'");
        return std::make_unique<ReplayProvider>(load_replay_scores(cfg.replay_scores));
    }
    if (cfg.external_response.empty()) throw InputError("config: provider 'external' needs 'external_response'");
    auto in = detail::open_input(cfg.external_response);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed external response '" + cfg.external_response + "': " + e.what());
    }
    return std::make_unique<ReplayProvider>(external_scores_by_id(j), "external");
}

inline WordSet load_configured_stopwords(const ExperimentConfig& cfg) {
    return cfg.stopwords.empty() ? WordSet{} : load_stopwords(cfg.stopwords);
}

/// Prices, calendar and posts, without sentiment scoring.
inline Dataset load_inputs(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.bars = load_price_csv(cfg.prices);
    if (ds.bars.empty()) throw InputError("price file '" + cfg.prices + "' has no rows");
    ds.calendar = TradingCalendar::from_bars(ds.bars);
    PostLoadOptions opts{cfg.min_likes};
    if (!cfg.tweets.empty()) ds.tweets = load_posts_jsonl(cfg.tweets, PostKind::tweet, opts);
    if (!cfg.news.empty()) ds.news = load_posts_jsonl(cfg.news, PostKind::news, opts);
    ds.tweets_assigned = assign_to_trading_days(ds.calendar, ds.tweets).size();
    ds.news_assigned = assign_to_trading_days(ds.calendar, ds.news).size();
    return ds;
}

/// Scores every post with the configured provider and builds the daily series.
inline void score_dataset(const ExperimentConfig& cfg, Dataset& ds) {
    auto provider = make_provider(cfg);
    ds.provider_name = provider->name();
    const auto stopwords = load_configured_stopwords(cfg);
    const CleanOptions clean{cfg.keep_cashtags};
    auto tweet_scored = score_posts(ds.tweets, ds.calendar, *provider, stopwords, cfg.weights, clean);
    auto news_scored = score_posts(ds.news, ds.calendar, *provider, stopwords, cfg.weights, clean);
    ds.tweets_assigned = tweet_scored.size();
    ds.news_assigned = news_scored.size();
    ds.tweet_daily = aggregate_daily(tweet_scored, ds.calendar);
    ds.news_daily = aggregate_daily(news_scored, ds.calendar);
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
    auto ds = load_inputs(cfg);
    score_dataset(cfg, ds);
    return ds;
}

inline AssembledFeatures featurize(const ExperimentConfig& cfg, const Dataset& ds, FeatureSet set) {
    const auto parts = parts_of(set);
    if ((parts.tweets || parts.weighted_tweets) && cfg.tweets.empty())
        throw InputError("feature set " + std::string(to_string(set)) + " needs a 'tweets' file");
    if (parts.news && cfg.news.empty())
        throw InputError("feature set " + std::string(to_string(set)) + " needs a 'news' file");
    Indicators indicators;
    if (parts.indicators) indicators = compute_indicators(ds.bars, cfg.rsi_period, cfg.sma_period);
    FeatureInputs in{&ds.bars, &ds.tweet_daily, &ds.news_daily, &indicators};
    return assemble(set, in, cfg.split_date);
}

/// Builds the external-service request for every post, tweets first.
inline nlohmann::json build_external_request(const ExperimentConfig& cfg, const Dataset& ds) {
    const auto stopwords = load_configured_stopwords(cfg);
    std::vector<CleanText> texts;
    nlohmann::json ids = nlohmann::json::array();
    for (const auto* posts : {&ds.tweets, &ds.news})
        for (const auto& p : *posts) {
            texts.push_back(clean_text(p.text, stopwords, {cfg.keep_cashtags}));
            ids.push_back(p.id);
        }
    const std::string tmpl =
        cfg.prompt_template.empty() ? std::string(kDefaultPromptTemplate) : load_prompt_template(cfg.prompt_template);
    auto req = external_adapter_request(texts, tmpl);
    for (std::size_t i = 0; i < ids.size(); ++i) req["items"][i]["id"] = ids[i];
    return req;
}

// ---- train / evaluate ---------------------------------------------------------

struct FeatureSetResult {
    FeatureSet feature_set = FeatureSet::Prices;
    std::size_t n_features = 0;
    std::vector<Date> test_dates;
    std::vector<double> actual_normalized;
    std::vector<double> actual_close;
    std::vector<std::vector<double>> pred_normalized;  // per replicate
    std::vector<std::vector<double>> pred_close;       // per replicate, denormalized
    std::vector<std::vector<double>> loss_histories;
    std::vector<LstmWeights> weights;
    std::vector<LstmConfig> run_configs;
    AggregateReport normalized;
    AggregateReport denormalized;
};

struct ExperimentResults {
    std::string config_hash;
    std::vector<FeatureSetResult> sets;
};

/// Runs `tasks` on up to `jobs` threads. Each task writes only its own slot.
/// The first failing task (in
/// task order) is rethrown.
inline void run_tasks(std::size_t jobs, std::vector<std::function<void()>>& tasks) {
    std::vector<std::exception_ptr> errors(tasks.size());
    auto run_one = [&](std::size_t k) {
        try {
            tasks[k]();
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    if (jobs <= 1 || tasks.size() <= 1) {
        for (std::size_t k = 0; k < tasks.size(); ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(jobs, tasks.size()); ++t)
            pool.emplace_back([&] {
                for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) run_one(k);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Trains `replicates` models per feature set with seeds base_seed + i and
/// scores the held-out span on both the normalized and the price scale.
inline ExperimentResults run_train_eval(const ExperimentConfig& cfg, const Dataset& ds) {
    ExperimentResults res;
    res.config_hash = config_hash(cfg);

    struct Prepared {
        AssembledFeatures features;
        WindowSplit windows;
        std::size_t close_col = 0;
    };
    std::vector<Prepared> prepared;
    for (auto set : cfg.feature_sets) {
        Prepared p;
        p.features = featurize(cfg, ds, set);
        p.windows = make_windows(p.features.normalized, cfg.lstm.lookback, cfg.split_date);
        if (p.windows.test.size() < 2)
            throw InsufficientHistory("need at least two trading days after the split date " + format_date(cfg.split_date));
        p.close_col = p.features.normalized.column_index("close");
        prepared.push_back(std::move(p));

        FeatureSetResult r;
        r.feature_set = set;
        const auto& prep = prepared.back();
        r.n_features = prep.windows.train.n_features;
        r.test_dates = prep.windows.test.target_dates;
        r.actual_normalized = prep.windows.test.targets;
        for (auto row : prep.windows.test.target_rows) r.actual_close.push_back(prep.features.raw.at(row, prep.close_col));
        r.pred_normalized.resize(cfg.replicates);
        r.pred_close.resize(cfg.replicates);
        r.loss_histories.resize(cfg.replicates);
        r.weights.resize(cfg.replicates);
        r.run_configs.resize(cfg.replicates);
        res.sets.push_back(std::move(r));
    }

    std::vector<std::function<void()>> tasks;
    for (std::size_t s = 0; s < prepared.size(); ++s)
        for (std::size_t i = 0; i < cfg.replicates; ++i)
            tasks.emplace_back([&, s, i] {
                auto& out = res.sets[s];
                const auto& prep = prepared[s];
                LstmConfig lc = cfg.lstm;
                lc.seed = cfg.lstm.seed + i;
                auto trained = train(prep.windows.train, lc);
                auto preds = predict(trained.weights, prep.windows.test);
                std::vector<double> closes;
                closes.reserve(preds.size());
                for (double p : preds) closes.push_back(prep.features.state.invert(prep.close_col, p));
                out.pred_normalized[i] = std::move(preds);
                out.pred_close[i] = std::move(closes);
                out.loss_histories[i] = std::move(trained.loss_history);
                out.weights[i] = std::move(trained.weights);
                out.run_configs[i] = lc;
            });
    run_tasks(cfg.jobs, tasks);

    for (auto& r : res.sets) {
        std::vector<RunMetrics> norm, denorm;
        for (std::size_t i = 0; i < cfg.replicates; ++i) {
            const auto seed = r.run_configs[i].seed;
            norm.push_back(evaluate_run(r.feature_set, seed, r.actual_normalized, r.pred_normalized[i],
                                        MetricScale::normalized));
            denorm.push_back(evaluate_run(r.feature_set, seed, r.actual_close, r.pred_close[i],
                                          MetricScale::denormalized));
        }
        r.normalized = replicate_average(norm);
        r.denormalized = replicate_average(denorm);
    }
    return res;
}

// ---- report files -------------------------------------------------------------

inline nlohmann::json protocol_json(const ExperimentConfig& cfg) {
    return {
        {"hidden_units", cfg.lstm.hidden_units},
        {"learning_rate", cfg.lstm.learning_rate},
        {"batch_size", cfg.lstm.batch_size},
        {"epochs", cfg.lstm.epochs},
        {"lookback", cfg.lstm.lookback},
        {"grad_clip_norm", cfg.lstm.grad_clip_norm},
        {"base_seed", cfg.lstm.seed},
        {"replicates", cfg.replicates},
        {"split_date", format_date(cfg.split_date)},
        {"rsi_period", cfg.rsi_period},
        {"sma_period", cfg.sma_period},
        {"alpha", cfg.weights.alpha},
        {"beta", cfg.weights.beta},
        {"gamma", cfg.weights.gamma},
        {"delta", cfg.weights.delta},
        {"initial_capital", cfg.sim.initial_capital},
        {"profit_threshold", cfg.sim.profit_threshold},
        {"dip_threshold", cfg.sim.dip_threshold},
        {"carry_rules", cfg.sim.carry_rules},
    };
}

inline nlohmann::json aggregate_json(const ExperimentConfig& cfg, const std::string& provider,
                                     const AggregateReport& a) {
    return {
        {"stock", cfg.stock},
        {"sentiment_provider", provider},
        {"feature_set", std::string(to_string(a.feature_set))},
        {"replicates", a.replicates},
        {"r2_mean", a.r2_mean},
        {"mae_mean", a.mae_mean},
        {"r2_runs", a.r2_runs},
        {"mae_runs", a.mae_runs},
        {"seeds", a.seeds},
        {"scale", std::string(to_string(a.scale))},
    };
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write '" + p.string() + "'");
    return out;
}

inline std::string hash_comment(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

}  // namespace detail

/// Writes report.json, metrics_table.csv, predictions/<set>.csv, loss/<set>.csv
/// and, when enabled, checkpoints/<set>_r<i>.json under `cfg.out_dir`.
inline void write_train_eval_outputs(const ExperimentConfig& cfg, const Dataset& ds, const ExperimentResults& res,
                                     bool save_checkpoints) {
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.out_dir);

    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : res.sets) {
        results.push_back(aggregate_json(cfg, ds.provider_name, r.normalized));
        results.push_back(aggregate_json(cfg, ds.provider_name, r.denormalized));
    }
    nlohmann::json report = {
        {"config_hash", res.config_hash},
        {"stock", cfg.stock},
        {"sentiment_provider", ds.provider_name},
        {"protocol", protocol_json(cfg)},
        {"results", results},
    };
    detail::open_output(out_dir / "report.json") << report.dump(2) << '\n';

    {
        auto out = detail::open_output(out_dir / "metrics_table.csv");
        out << detail::hash_comment(res.config_hash);
        out << "feature_set," << cfg.stock << " R2," << cfg.stock << " MAE," << cfg.stock << " R2 (price scale),"
            << cfg.stock << " MAE (price scale)\n";
        for (const auto& r : res.sets)
            out << to_string(r.feature_set) << ',' << detail::format_double(r.normalized.r2_mean) << ','
                << detail::format_double(r.normalized.mae_mean) << ',' << detail::format_double(r.denormalized.r2_mean)
                << ',' << detail::format_double(r.denormalized.mae_mean) << '\n';
    }

    for (const auto& r : res.sets) {
        const std::string name(to_string(r.feature_set));
        {
            auto out = detail::open_output(out_dir / "predictions" / (name + ".csv"));
            out << detail::hash_comment(res.config_hash) << "date,actual_close";
            for (std::size_t i = 0; i < r.pred_close.size(); ++i) out << ",pred_r" << i;
            out << '\n';
            for (std::size_t k = 0; k < r.test_dates.size(); ++k) {
                out << format_date(r.test_dates[k]) << ',' << detail::format_double(r.actual_close[k]);
                for (const auto& p : r.pred_close) out << ',' << detail::format_double(p[k]);
                out << '\n';
            }
        }
        {
            auto out = detail::open_output(out_dir / "loss" / (name + ".csv"));
            out << detail::hash_comment(res.config_hash) << "epoch";
            for (std::size_t i = 0; i < r.loss_histories.size(); ++i) out << ",loss_r" << i;
            out << '\n';
            const std::size_t epochs = r.loss_histories.empty() ? 0 : r.loss_histories.front().size();
            for (std::size_t e = 0; e < epochs; ++e) {
                out << e + 1;
                for (const auto& h : r.loss_histories) out << ',' << detail::format_double(h[e]);
                out << '\n';
            }
        }
        if (save_checkpoints)
            for (std::size_t i = 0; i < r.weights.size(); ++i) {
                auto j = checkpoint_to_json(r.weights[i], r.run_configs[i]);
                j["config_hash"] = res.config_hash;
                j["feature_set"] = name;
                detail::open_output(out_dir / "checkpoints" / (name + "_r" + std::to_string(i) + ".json"))
                    << j.dump() << '\n';
            }
    }
}

// ---- simulation -----------------------------------------------------------------

/// Denormalized predictions as written by write_train_eval_outputs.
struct PredictionFile {
    std::vector<Date> dates;
    std::vector<std::vector<double>> runs;  // per replicate
};

inline PredictionFile read_predictions_csv(const std::string& path) {
    auto in = detail::open_input(path);
    PredictionFile pf;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = detail::split_csv_line(line);
        if (!header) {
            if (cells.size() < 3 || cells[0] != "date" || cells[1] != "actual_close")
                throw UnparsableRow(lineno, "expected header date,actual_close,pred_r0,...");
            pf.runs.resize(cells.size() - 2);
            header = true;
            continue;
        }
        if (cells.size() != pf.runs.size() + 2) throw UnparsableRow(lineno, "wrong number of cells");
        auto d = parse_date(cells[0]);
        if (!d) throw UnparsableRow(lineno, "bad date '" + cells[0] + "'");
        pf.dates.push_back(*d);
        for (std::size_t i = 0; i < pf.runs.size(); ++i) {
            auto v = detail::parse_double(cells[i + 2]);
            if (!v) throw UnparsableRow(lineno, "bad prediction '" + cells[i + 2] + "'");
            pf.runs[i].push_back(*v);
        }
    }
    if (!header) throw UnparsableRow(lineno, "empty predictions file");
    return pf;
}

struct FeatureSetSimulation {
    FeatureSet feature_set = FeatureSet::Prices;
    std::vector<SimulationResult> runs;
    double percent_gain_mean = 0.0;
};

inline FeatureSetSimulation simulate_predictions(FeatureSet set, const PredictionFile& pf, const Dataset& ds,
                                                 const SimConfig& sim) {
    std::vector<PriceBar> bars;
    for (const auto& d : pf.dates) {
        auto idx = ds.calendar.index_of(d);
        if (!idx) throw MisalignedSeries("prediction date " + format_date(d) + " is not a trading day in the price file");
        bars.push_back(ds.bars[*idx]);
    }
    FeatureSetSimulation out;
    out.feature_set = set;
    std::vector<double> gains;
    for (const auto& run : pf.runs) {
        out.runs.push_back(run_simulation(run, bars, sim));
        gains.push_back(out.runs.back().percent_gain);
    }
    std::sort(gains.begin(), gains.end());
    double s = 0.0;
    for (double g : gains) s += g;
    out.percent_gain_mean = gains.empty() ? 0.0 : s / static_cast<double>(gains.size());
    return out;
}

/// Writes ledgers/<set>_r<i>.csv, simulation_summary.json and simulation_table.csv.
inline void write_simulation_outputs(const ExperimentConfig& cfg, const Dataset& ds, const std::string& hash,
                                     const std::vector<FeatureSetSimulation>& sims) {
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.out_dir);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : sims) {
        const std::string name(to_string(s.feature_set));
        std::vector<double> gains;
        for (std::size_t i = 0; i < s.runs.size(); ++i) {
            gains.push_back(s.runs[i].percent_gain);
            auto out = detail::open_output(out_dir / "ledgers" / (name + "_r" + std::to_string(i) + ".csv"));
            out << detail::hash_comment(hash);
            write_ledger_csv(out, s.runs[i].ledger);
        }
        rows.push_back({{"stock", cfg.stock},
                        {"sentiment_provider", ds.provider_name},
                        {"feature_set", name},
                        {"replicates", s.runs.size()},
                        {"percent_gain_mean", s.percent_gain_mean},
                        {"percent_gain_runs", gains}});
    }
    nlohmann::json summary = {
        {"config_hash", hash},
        {"stock", cfg.stock},
        {"sentiment_provider", ds.provider_name},
        {"initial_capital", cfg.sim.initial_capital},
        {"profit_threshold", cfg.sim.profit_threshold},
        {"dip_threshold", cfg.sim.dip_threshold},
        {"carry_rules", cfg.sim.carry_rules},
        {"results", rows},
    };
    detail::open_output(out_dir / "simulation_summary.json") << summary.dump(2) << '\n';

    auto out = detail::open_output(out_dir / "simulation_table.csv");
    out << detail::hash_comment(hash) << "feature_set,sentiment_provider," << cfg.stock << " gain %\n";
    for (const auto& s : sims)
        out << to_string(s.feature_set) << ',' << ds.provider_name << ',' << detail::format_double(s.percent_gain_mean)
            << '\n';
}

}  // namespace mmstock
