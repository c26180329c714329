#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmstock/error.hpp"
#include "mmstock/ingest.hpp"

namespace mmstock {

struct SimConfig {
    double initial_capital = 1'000'000.0;
    double profit_threshold = 0.02;
    double dip_threshold = 0.02;
    // Turns the dip-buy / profit-exit carry rules on or off as a unit.
    bool carry_rules = true;

    void validate() const {
        if (!(initial_capital > 0.0)) throw InputError("initial capital must be positive");
        if (!(profit_threshold >= 0.0 && dip_threshold >= 0.0)) throw InputError("thresholds must be non-negative");
    }
};

enum class TradeAction { long_open_close, short_open_close, buy_at_close, deferred_exit, none };

inline std::string_view to_string(TradeAction a) {
    switch (a) {
        case TradeAction::long_open_close: return "long_open_close";
        case TradeAction::short_open_close: return "short_open_close";
        case TradeAction::buy_at_close: return "buy_at_close";
        case TradeAction::deferred_exit: return "deferred_exit";
        case TradeAction::none: return "none";
    }
    return "";
}

/// (predicted close - true open) / true open.
inline double return_signal(double pred_close, double true_open) {
    if (!(true_open > 0.0)) throw NonPositiveOpen(true_open);
    return (pred_close - true_open) / true_open;
}

/// A position bought at a close and held across days.
struct CarriedPosition {
    Date entry_date;
    double entry_price = 0.0;
};

/// What happens on one day, in execution order: optional exit of the carried
/// position at the open, the same-day round trip, optional exit at the
/// close, optional dip buy at the close.
struct DayPlan {
    bool exit_at_open = false;
    TradeAction round_trip = TradeAction::none;
    bool exit_at_close = false;
    bool buy_at_close = false;
};

/// Trading policy for one day.
///  - r > 0: long at the open, sell at the close; r < 0: short at the open,
///    cover at the close; r == 0: no round trip.
///  - A carried position exits at the open if the open is at least
///    (1 + profit_threshold) * entry, otherwise at the close under the same
///    test. No round trip runs on a day the position stays open.
///  - With no position held after the open, open <= (1 - dip_threshold) *
///    pred_close buys at the close and carries. At most one carried position.
inline DayPlan trade_decision(double r, const PriceBar& bar, double pred_close, const SimConfig& cfg,
                              const std::optional<CarriedPosition>& open_position) {
    DayPlan plan;
    bool holding = open_position.has_value();
    if (holding && cfg.carry_rules && bar.open >= (1.0 + cfg.profit_threshold) * open_position->entry_price) {
        plan.exit_at_open = true;
        holding = false;
    }
    if (!holding) {
        if (r > 0.0) plan.round_trip = TradeAction::long_open_close;
        else if (r < 0.0) plan.round_trip = TradeAction::short_open_close;
    }
    if (holding && cfg.carry_rules && bar.close >= (1.0 + cfg.profit_threshold) * open_position->entry_price)
        plan.exit_at_close = true;
    if (!holding && cfg.carry_rules && bar.open <= (1.0 - cfg.dip_threshold) * pred_close) plan.buy_at_close = true;
    return plan;
}

struct LedgerEntry {
    Date date;
    double r = 0.0;
    TradeAction action = TradeAction::none;
    std::optional<double> entry_price;
    std::optional<double> exit_price;
    double capital_after = 0.0;

    friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

struct SimulationResult {
    std::vector<LedgerEntry> ledger;
    double initial_capital = 0.0;
    double final_capital = 0.0;
    double percent_gain = 0.0;
};

/// Full-capital, fractional-share, cost-free simulation. Every day emits one
/// round-trip row (possibly `none`) plus rows for carried-position events.
/// A position still open after the last day is sold at the last close; no
/// dip buy is opened on the last day.
inline SimulationResult run_simulation(std::span<const double> pred_closes, std::span<const PriceBar> bars,
                                       const SimConfig& cfg = {}) {
    cfg.validate();
    if (pred_closes.size() != bars.size())
        throw MisalignedSeries("predictions (" + std::to_string(pred_closes.size()) + ") and bars (" +
                               std::to_string(bars.size()) + ") differ in length");
    SimulationResult res;
    res.initial_capital = cfg.initial_capital;
    double capital = cfg.initial_capital;
    std::optional<CarriedPosition> carry;

    for (std::size_t t = 0; t < bars.size(); ++t) {
        const auto& bar = bars[t];
        const double r = return_signal(pred_closes[t], bar.open);
        DayPlan plan = trade_decision(r, bar, pred_closes[t], cfg, carry);
        if (t + 1 == bars.size()) plan.buy_at_close = false;

        if (plan.exit_at_open) {
            capital = capital * bar.open / carry->entry_price;
            res.ledger.push_back({bar.date, r, TradeAction::deferred_exit, carry->entry_price, bar.open, capital});
            carry.reset();
        }
        switch (plan.round_trip) {
            case TradeAction::long_open_close:
                capital = capital * bar.close / bar.open;
                res.ledger.push_back({bar.date, r, plan.round_trip, bar.open, bar.close, capital});
                break;
            case TradeAction::short_open_close:
                capital = capital + capital * (bar.open - bar.close) / bar.open;
                res.ledger.push_back({bar.date, r, plan.round_trip, bar.open, bar.close, capital});
                break;
            default:
                res.ledger.push_back({bar.date, r, TradeAction::none, std::nullopt, std::nullopt, capital});
                break;
        }
        if (plan.exit_at_close) {
            capital = capital * bar.close / carry->entry_price;
            res.ledger.push_back({bar.date, r, TradeAction::deferred_exit, carry->entry_price, bar.close, capital});
            carry.reset();
        }
        if (plan.buy_at_close) {
            carry = CarriedPosition{bar.date, bar.close};
            res.ledger.push_back({bar.date, r, TradeAction::buy_at_close, bar.close, std::nullopt, capital});
        }
    }
    if (carry) {
        const auto& last = bars.back();
        capital = capital * last.close / carry->entry_price;
        res.ledger.push_back({last.date, return_signal(pred_closes.back(), last.open), TradeAction::deferred_exit,
                              carry->entry_price, last.close, capital});
    }
    res.final_capital = capital;
    res.percent_gain = 100.0 * (capital - cfg.initial_capital) / cfg.initial_capital;
    return res;
}

inline void write_ledger_csv(std::ostream& out, const std::vector<LedgerEntry>& ledger) {
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
    out << "date,r,action,entry_price,exit_price,capital_after\n";
    for (const auto& e : ledger)
        out << format_date(e.date) << ',' << detail::format_double(e.r) << ',' << to_string(e.action) << ','
            << opt(e.entry_price) << ',' << opt(e.exit_price) << ',' << detail::format_double(e.capital_after) << '\n';
}

}  // namespace mmstock
