#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tradecast/bot.hpp"
#include "tradecast/rng.hpp"

using namespace tradecast;

namespace {

// Independent detector: buy at strict interior local minima, sell at strict
// interior local maxima, hold everywhere else.
std::vector<ActionKind> extremum_oracle(const std::vector<double>& prices) {
  std::vector<ActionKind> out(prices.size(), ActionKind::Hold);
  for (std::size_t d = 1; d + 1 < prices.size(); ++d) {
    if (prices[d] < prices[d - 1] && prices[d] < prices[d + 1]) out[d] = ActionKind::Buy;
    if (prices[d] > prices[d - 1] && prices[d] > prices[d + 1]) out[d] = ActionKind::Sell;
  }
  return out;
}

// Brute-force wealth: walk the executed trades, multiplying by sell/buy price
// ratios; cash left invested at the end is marked to the final price.
double product_formula_wealth(const std::vector<double>& prices,
                              const std::vector<Action>& actions, double initial_cash) {
  double wealth = initial_cash;
  double buy_price = 0.0;
  bool holding = false;
  for (const Action& a : actions) {
    if (a.kind == ActionKind::Buy && !holding) {
      buy_price = prices[a.day];
      holding = true;
    } else if (a.kind == ActionKind::Sell && holding) {
      wealth *= prices[a.day] / buy_price;
      holding = false;
    }
  }
  if (holding) wealth *= prices.back() / buy_price;
  return wealth;
}

std::vector<double> random_walk(Rng& rng, std::size_t len, double start = 100.0) {
  std::vector<double> prices{start};
  for (std::size_t d = 1; d < len; ++d) {
    const double step = rng.next_uniform(-1.0, 1.0);
    prices.push_back(std::max(1.0, prices.back() + step));
  }
  return prices;
}

}  // namespace

TEST(DecideActionsTest, MonotoneRiseHoldsThroughout) {
  const auto actions = decide_actions({1, 2, 3, 4});
  ASSERT_EQ(actions.size(), 4u);
  for (const Action& a : actions) EXPECT_EQ(a.kind, ActionKind::Hold);
}

TEST(DecideActionsTest, VShapeBuysAtTrough) {
  const auto actions = decide_actions({3, 2, 1, 2, 3});
  ASSERT_EQ(actions.size(), 5u);
  EXPECT_EQ(actions[2].kind, ActionKind::Buy);
  for (std::size_t d : {0u, 1u, 3u, 4u}) EXPECT_EQ(actions[d].kind, ActionKind::Hold);
}

TEST(DecideActionsTest, PeakSells) {
  const auto actions = decide_actions({1, 3, 1});
  EXPECT_EQ(actions[1].kind, ActionKind::Sell);
}

TEST(DecideActionsTest, PlateauProducesNoTrade) {
  // Flat days give sign 0, so curvature never reaches +-2.
  const auto actions = decide_actions({1, 2, 2, 3});
  for (const Action& a : actions) EXPECT_EQ(a.kind, ActionKind::Hold);
}

TEST(DecideActionsTest, TooShortRejected) {
  EXPECT_THROW(decide_actions({1, 2}), ArgumentError);
}

TEST(DecideActionsTest, ExhaustiveEquivalenceWithExtremumOracle) {
  // All 3^5 price sequences over {1, 2, 3}.
  std::vector<double> prices(5);
  for (int code = 0; code < 243; ++code) {
    int c = code;
    for (int d = 0; d < 5; ++d) {
      prices[d] = 1.0 + c % 3;
      c /= 3;
    }
    const auto actions = decide_actions(prices);
    const auto want = extremum_oracle(prices);
    for (std::size_t d = 0; d < 5; ++d)
      EXPECT_EQ(actions[d].kind, want[d]) << "sequence code " << code << " day " << d;
  }
}

TEST(DecideActionsTest, RandomWalkEquivalenceWithExtremumOracle) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto prices = random_walk(rng, 50);
    const auto actions = decide_actions(prices);
    const auto want = extremum_oracle(prices);
    for (std::size_t d = 0; d < prices.size(); ++d) EXPECT_EQ(actions[d].kind, want[d]);
  }
}

TEST(DecideActionsTest, ScaleInvariance) {
  Rng rng(43);
  const auto prices = random_walk(rng, 30);
  std::vector<double> scaled;
  for (double p : prices) scaled.push_back(3.7 * p);
  const auto a = decide_actions(prices);
  const auto b = decide_actions(scaled);
  for (std::size_t d = 0; d < prices.size(); ++d) EXPECT_EQ(a[d].kind, b[d].kind);
}

TEST(SimulateTradesTest, FlatPricesNeverGrow) {
  const std::vector<double> prices{5, 5, 5, 5};
  const std::vector<Action> actions{{1, ActionKind::Buy}, {2, ActionKind::Sell}};
  const TradeLedger ledger = simulate_trades(prices, actions, 100.0);
  EXPECT_DOUBLE_EQ(ledger.final_growth_pct(), 0.0);
  for (const LedgerEntry& e : ledger.entries) EXPECT_DOUBLE_EQ(e.value, 100.0);
}

TEST(SimulateTradesTest, HandComputedBuyAtDip) {
  const std::vector<double> prices{2, 1, 2};
  const std::vector<Action> actions{{1, ActionKind::Buy}};
  const TradeLedger ledger = simulate_trades(prices, actions, 100.0);
  EXPECT_DOUBLE_EQ(ledger.entries[1].shares, 100.0);
  EXPECT_DOUBLE_EQ(ledger.final_value(), 200.0);
  EXPECT_DOUBLE_EQ(ledger.final_growth_pct(), 100.0);
}

TEST(SimulateTradesTest, NoOpTradesAreRecorded) {
  const std::vector<double> prices{2, 3, 4};
  // Sell with no shares, then buy, then buy again with no cash.
  const std::vector<Action> actions{{0, ActionKind::Sell},
                                    {1, ActionKind::Buy},
                                    {2, ActionKind::Buy}};
  const TradeLedger ledger = simulate_trades(prices, actions, 90.0);
  EXPECT_FALSE(ledger.entries[0].executed);
  EXPECT_TRUE(ledger.entries[1].executed);
  EXPECT_FALSE(ledger.entries[2].executed);
  EXPECT_DOUBLE_EQ(ledger.final_value(), 30.0 * 4.0);
}

TEST(SimulateTradesTest, ValueConservedOnHoldDays) {
  Rng rng(44);
  const auto prices = random_walk(rng, 40);
  const auto actions = decide_actions(prices);
  const TradeLedger ledger = simulate_trades(prices, actions, 500.0);
  for (std::size_t d = 1; d < ledger.entries.size(); ++d) {
    const LedgerEntry& prev = ledger.entries[d - 1];
    const LedgerEntry& cur = ledger.entries[d];
    // Share count changes only on executed days; value moves only with price.
    const double expected_change = prev.shares * (cur.price - prev.price);
    EXPECT_NEAR(cur.value - prev.value, expected_change, 1e-9);
  }
}

TEST(SimulateTradesTest, ZigzagMatchesProductFormula) {
  const std::vector<double> prices{2, 1, 2, 1, 2};
  const auto actions = decide_actions(prices);
  const TradeLedger ledger = simulate_trades(prices, actions, 100.0);
  const double want = product_formula_wealth(prices, actions, 100.0);
  EXPECT_NEAR(ledger.final_value(), want, 1e-12 * want);
  EXPECT_DOUBLE_EQ(ledger.final_value(), 400.0);  // buy@1, sell@2, twice
}

TEST(SimulateTradesTest, GrowthIsScaleInvariant) {
  Rng rng(45);
  const auto prices = random_walk(rng, 25);
  std::vector<double> scaled;
  for (double p : prices) scaled.push_back(2.5 * p);
  const auto actions = decide_actions(prices);
  const TradeLedger a = simulate_trades(prices, actions, 100.0);
  const TradeLedger b = simulate_trades(scaled, actions, 100.0);
  for (std::size_t d = 0; d < prices.size(); ++d)
    EXPECT_NEAR(a.entries[d].growth_pct, b.entries[d].growth_pct, 1e-9);
}

TEST(SimulateTradesTest, InvalidInputsRejected) {
  EXPECT_THROW(simulate_trades({1, 2}, {}, 0.0), ArgumentError);
  EXPECT_THROW(simulate_trades({1, -1}, {}, 100.0), ArgumentError);
  EXPECT_THROW(simulate_trades({1, 2}, {{5, ActionKind::Buy}}, 100.0), ArgumentError);
  EXPECT_THROW(
      simulate_trades({1, 2}, {{0, ActionKind::Buy}, {0, ActionKind::Sell}}, 100.0),
      ArgumentError);
}

TEST(SimulateTradesTest, OracleDecisionsMatchProductFormulaOnRandomWalks) {
  Rng rng(46);
  for (int trial = 0; trial < 100; ++trial) {
    const auto prices = random_walk(rng, 60);
    const auto actions = decide_actions(prices);
    const TradeLedger ledger = simulate_trades(prices, actions, 1000.0);
    const double want = product_formula_wealth(prices, actions, 1000.0);
    EXPECT_NEAR(ledger.final_value(), want, 1e-12 * want);
  }
}

namespace {

std::string iso_date(int ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", 2019 + ordinal / 336,
                1 + (ordinal % 336) / 28, 1 + (ordinal % 336) % 28);
  return buf;
}

PriceSeries series_from_values(const std::vector<double>& values,
                               const std::string& ticker = "SYN") {
  PriceSeries s;
  s.ticker = ticker;
  s.feature_names = {"adj_close"};
  s.features = Matrix(values.size(), 1);
  for (std::size_t r = 0; r < values.size(); ++r) {
    s.features(r, 0) = values[r];
    s.dates.push_back(iso_date(static_cast<int>(r)));
  }
  return s;
}

NetworkParams zero_model() {
  NetworkSpec spec{.stack_depth = 1, .units = 2, .input_dim = 1, .forward_look = 1};
  NetworkParams p;
  p.spec = spec;
  p.layers.push_back(LstmLayerParams::zeros(2, 1));
  p.dense_w = Matrix(1, 2);
  p.dense_b = Matrix(1, 1, 0.5);
  return p;
}

}  // namespace

TEST(BacktestTest, ConstantForecastNeverTrades) {
  std::vector<double> values;
  for (int d = 0; d < 20; ++d) values.push_back(50.0 + d % 5);
  const PriceSeries raw = series_from_values(values);
  const Scaler scaler = fit_scaler(raw, 0, raw.size());
  const BacktestResult result =
      backtest(zero_model(), raw, scaler, 10, 3, 100.0, DecisionSource::Predicted, 5);
  EXPECT_EQ(result.trade_count, 0u);
  EXPECT_DOUBLE_EQ(result.final_growth_pct, 0.0);
}

TEST(BacktestTest, OracleModeOnVShape) {
  // Prices before the window pad the history; the backtest runs on the
  // V-shaped tail 3,2,1,2,3.
  std::vector<double> values{5, 5, 5, 5, 5, 3, 2, 1, 2, 3};
  const PriceSeries raw = series_from_values(values);
  const Scaler scaler = fit_scaler(raw, 0, raw.size());
  const BacktestResult result =
      backtest(zero_model(), raw, scaler, 5, 5, 100.0, DecisionSource::Oracle, 5);
  EXPECT_EQ(result.trade_count, 1u);
  ASSERT_EQ(result.buy_days.size(), 1u);
  EXPECT_EQ(result.buy_days[0], 2u);
  EXPECT_DOUBLE_EQ(result.ledger.final_value(), 300.0);
  EXPECT_DOUBLE_EQ(result.final_growth_pct, 200.0);
}

TEST(BacktestTest, OracleDominatesPredictedOnRandomWalks) {
  Rng rng(47);
  NetworkSpec spec{.stack_depth = 1, .units = 3, .input_dim = 1, .forward_look = 1};
  Rng param_rng(48);
  const NetworkParams model = init_params(spec, param_rng);

  for (int trial = 0; trial < 50; ++trial) {
    const auto values = random_walk(rng, 40);
    const PriceSeries raw = series_from_values(values);
    const Scaler scaler = fit_scaler(raw, 0, raw.size());
    const BacktestResult oracle =
        backtest(model, raw, scaler, 10, 30, 100.0, DecisionSource::Oracle, 5);
    const BacktestResult predicted =
        backtest(model, raw, scaler, 10, 30, 100.0, DecisionSource::Predicted, 5);
    EXPECT_GE(oracle.ledger.final_value(), predicted.ledger.final_value() - 1e-9);
  }
}

TEST(BacktestTest, ShortHorizonRejected) {
  const PriceSeries raw = series_from_values({1, 2, 3, 4, 5, 6, 7, 8});
  const Scaler scaler = fit_scaler(raw, 0, raw.size());
  EXPECT_THROW(backtest(zero_model(), raw, scaler, 5, 2, 100.0, DecisionSource::Oracle, 5),
               ArgumentError);
}

TEST(LedgerCsvTest, HeaderAndRowShape) {
  const std::vector<double> prices{2, 1, 2};
  const TradeLedger ledger =
      simulate_trades(prices, {{1, ActionKind::Buy}}, 100.0, {"2020-01-01", "2020-01-02", "2020-01-03"});
  const std::string csv = ledger_csv(ledger);
  EXPECT_NE(csv.find("day_index,date,price,action,executed,cash,shares,value,growth_pct"),
            std::string::npos);
  EXPECT_NE(csv.find("1,2020-01-02,1,buy,1,0,100,100,0"), std::string::npos) << csv;
}
