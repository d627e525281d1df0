#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/forecast.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

enum class ActionKind { Buy, Sell, Hold };

inline std::string to_string(ActionKind a) {
  switch (a) {
    case ActionKind::Buy: return "buy";
    case ActionKind::Sell: return "sell";
    default: return "hold";
  }
}

struct Action {
  std::size_t day = 0;
  ActionKind kind = ActionKind::Hold;
};

namespace detail {
inline int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }
}

// End-of-day decisions over a forecast trajectory. With the daily change
// signs delta_i = sign(c[i+1] - c[i]) and their curvature
// Delta_i = delta_{i+1} - delta_i:
//   Delta_i = +2  (falling then rising)  -> day i+1 is a trough: Buy
//   Delta_i = -2  (rising then falling)  -> day i+1 is a peak:   Sell
// Everything else, including the +-1 values produced by flat days, holds.
// The first and last days have no curvature and always hold. One action per
// day; only strict interior extrema trade.
inline std::vector<Action> decide_actions(const std::vector<double>& prices) {
  const std::size_t n = prices.size();
  if (n < 3)
    throw ArgumentError("decide_actions: needs at least 3 prices, got " + std::to_string(n));

  std::vector<Action> actions(n);
  for (std::size_t d = 0; d < n; ++d) actions[d].day = d;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const int delta_i = detail::sign_of(prices[i + 1] - prices[i]);
    const int delta_next = detail::sign_of(prices[i + 2] - prices[i + 1]);
    const int curvature = delta_next - delta_i;
    if (curvature == 2) actions[i + 1].kind = ActionKind::Buy;
    else if (curvature == -2) actions[i + 1].kind = ActionKind::Sell;
  }
  return actions;
}

struct LedgerEntry {
  std::size_t day = 0;
  std::string date;
  double price = 0.0;
  ActionKind action = ActionKind::Hold;
  bool executed = false;  // Buy with no cash / Sell with no shares is a no-op
  double cash = 0.0;
  double shares = 0.0;
  double value = 0.0;
  double growth_pct = 0.0;  // 100 * (value / initial_cash - 1)
};

struct TradeLedger {
  double initial_cash = 0.0;
  std::vector<LedgerEntry> entries;

  double final_value() const { return entries.empty() ? initial_cash : entries.back().value; }
  double final_growth_pct() const { return entries.empty() ? 0.0 : entries.back().growth_pct; }
};

// All-in / all-out execution at each day's close: Buy converts all cash to
// (fractional) shares, Sell converts all shares back to cash. No transaction
// costs, no shorting.
inline TradeLedger simulate_trades(const std::vector<double>& prices,
                                   const std::vector<Action>& actions, double initial_cash,
                                   const std::vector<std::string>& dates = {}) {
  if (!(initial_cash > 0.0))
    throw ArgumentError("simulate_trades: initial cash must be positive");
  if (!dates.empty() && dates.size() != prices.size())
    throw ArgumentError("simulate_trades: dates/prices length mismatch");
  for (std::size_t d = 0; d < prices.size(); ++d)
    if (!(prices[d] > 0.0))
      throw ArgumentError("simulate_trades: nonpositive price at day " + std::to_string(d));

  std::vector<ActionKind> by_day(prices.size(), ActionKind::Hold);
  std::vector<bool> assigned(prices.size(), false);
  for (const Action& a : actions) {
    if (a.day >= prices.size())
      throw ArgumentError("simulate_trades: action day " + std::to_string(a.day) +
                          " outside [0, " + std::to_string(prices.size()) + ")");
    if (assigned[a.day])
      throw ArgumentError("simulate_trades: duplicate action for day " +
                          std::to_string(a.day));
    assigned[a.day] = true;
    by_day[a.day] = a.kind;
  }

  TradeLedger ledger;
  ledger.initial_cash = initial_cash;
  double cash = initial_cash;
  double shares = 0.0;
  for (std::size_t d = 0; d < prices.size(); ++d) {
    LedgerEntry e;
    e.day = d;
    e.date = dates.empty() ? "" : dates[d];
    e.price = prices[d];
    e.action = by_day[d];
    if (e.action == ActionKind::Buy && cash > 0.0) {
      shares += cash / prices[d];
      cash = 0.0;
      e.executed = true;
    } else if (e.action == ActionKind::Sell && shares > 0.0) {
      cash += shares * prices[d];
      shares = 0.0;
      e.executed = true;
    }
    e.cash = cash;
    e.shares = shares;
    e.value = cash + shares * prices[d];
    e.growth_pct = 100.0 * (e.value / initial_cash - 1.0);
    ledger.entries.push_back(std::move(e));
  }
  return ledger;
}

enum class DecisionSource { Predicted, Oracle };

inline std::string to_string(DecisionSource s) {
  return s == DecisionSource::Predicted ? "predicted" : "oracle";
}

inline DecisionSource decision_source_from_string(const std::string& s) {
  if (s == "predicted") return DecisionSource::Predicted;
  if (s == "oracle") return DecisionSource::Oracle;
  throw ArgumentError("unknown decision source: '" + s + "'");
}

struct BacktestResult {
  TradeLedger ledger;
  DecisionSource source = DecisionSource::Predicted;
  ForecastSeries forecast;  // the predicted trajectory; empty in oracle mode
  std::size_t trade_count = 0;
  std::vector<std::size_t> buy_days;
  std::vector<std::size_t> sell_days;
  double final_growth_pct = 0.0;
};

// Pre-decides horizon days of actions and executes them against the actual
// closing prices. Predicted mode decides on the updated-truth forecast from
// the window ending just before start_index; oracle mode decides on the
// actual prices themselves (perfect-foresight reference).
inline BacktestResult backtest(const NetworkParams& params, const PriceSeries& raw_series,
                               const Scaler& scaler, std::size_t start_index,
                               std::size_t horizon, double initial_cash,
                               DecisionSource source, std::size_t past_history) {
  if (horizon < 3)
    throw ArgumentError("backtest: horizon must be >= 3 to detect curvature");
  if (start_index < past_history)
    throw ArgumentError("backtest: needs " + std::to_string(past_history) +
                        " rows of history before index " + std::to_string(start_index));
  if (start_index + horizon > raw_series.size())
    throw ArgumentError("backtest: horizon " + std::to_string(horizon) +
                        " runs past the end of the series");

  std::vector<double> actual;
  std::vector<std::string> dates;
  for (std::size_t r = start_index; r < start_index + horizon; ++r) {
    actual.push_back(raw_series.price(r));
    dates.push_back(raw_series.dates[r]);
  }

  BacktestResult out;
  out.source = source;
  std::vector<Action> actions;
  if (source == DecisionSource::Oracle) {
    actions = decide_actions(actual);
  } else {
    const PriceSeries scaled = apply_scaler(raw_series, scaler);
    Matrix seed(past_history, scaled.feature_count());
    const std::size_t base = start_index - past_history;
    for (std::size_t r = 0; r < past_history; ++r)
      for (std::size_t f = 0; f < scaled.feature_count(); ++f)
        seed(r, f) = scaled.features(base + r, f);
    out.forecast = autoregressive_rollout(params, seed, horizon, scaler, past_history,
                                          raw_series.ticker, dates);
    actions = decide_actions(out.forecast.price);
  }

  out.ledger = simulate_trades(actual, actions, initial_cash, dates);
  for (const LedgerEntry& e : out.ledger.entries) {
    if (!e.executed) continue;
    ++out.trade_count;
    (e.action == ActionKind::Buy ? out.buy_days : out.sell_days).push_back(e.day);
  }
  out.final_growth_pct = out.ledger.final_growth_pct();
  return out;
}

// Emission: day_index,date,price,action,executed,cash,shares,value,growth_pct
inline std::string ledger_csv(const TradeLedger& ledger) {
  std::string out = "day_index,date,price,action,executed,cash,shares,value,growth_pct\n";
  for (const LedgerEntry& e : ledger.entries) {
    out += std::to_string(e.day);
    out += ',';
    out += e.date;
    out += ',';
    out += format_double(e.price);
    out += ',';
    out += to_string(e.action);
    out += ',';
    out += e.executed ? "1" : "0";
    out += ',';
    out += format_double(e.cash);
    out += ',';
    out += format_double(e.shares);
    out += ',';
    out += format_double(e.value);
    out += ',';
    out += format_double(e.growth_pct);
    out += '\n';
  }
  return out;
}

}  // namespace tradecast
