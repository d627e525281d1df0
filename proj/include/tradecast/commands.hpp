#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/bot.hpp"
#include "tradecast/checkpoint.hpp"
#include "tradecast/config.hpp"
#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/forecast.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/train.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

namespace detail {

struct LoadedSeries {
  PriceSeries raw;
  std::size_t dropped_rows = 0;
};

inline LoadedSeries load_series(const RunConfig& cfg, const std::string& ticker) {
  const auto path = cfg.csv_path(ticker);
  CsvParse parsed = parse_ohlcv_csv(read_text_file(path), ticker);
  LoadedSeries out{std::move(parsed.series), parsed.dropped_rows};
  if (!cfg.exogenous_csv.empty()) {
    CsvParse exo = parse_feature_csv(read_text_file(cfg.exogenous_csv));
    JoinResult joined = attach_exogenous(out.raw, exo.series);
    out.raw = std::move(joined.series);
    out.dropped_rows += joined.dropped_left + exo.dropped_rows;
  }
  return out;
}

// Scaler fit range: the chronological training prefix of the rows, matching
// the 80/20 window split so dev prices never shape the transform.
inline std::size_t scaler_fit_rows(const RunConfig& cfg, std::size_t len) {
  auto n = static_cast<std::size_t>(cfg.split_ratio * static_cast<double>(len));
  if (n < 2) n = std::min<std::size_t>(2, len);
  return n;
}

inline void require_file(const std::string& what, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError(what + " not found: " + path.string());
}

inline void validate_data_paths(const RunConfig& cfg) {
  if (cfg.tickers.empty() && cfg.groups.empty())
    throw ConfigError("no tickers configured (set 'ticker', 'tickers' or 'group.<name>')");
  for (const auto& t : cfg.tickers) require_file("data file for " + t, cfg.csv_path(t));
  for (const auto& g : cfg.groups)
    for (const auto& t : g.tickers) require_file("data file for " + t, cfg.csv_path(t));
  if (!cfg.exogenous_csv.empty()) require_file("exogenous csv", cfg.exogenous_csv);
}

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir.string());
  return dir;
}

inline std::string loss_history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const EpochStats& e : history) {
    out += std::to_string(e.epoch);
    out += ',';
    out += format_double(e.train_loss);
    out += ',';
    out += format_double(e.val_loss);
    out += '\n';
  }
  return out;
}

inline std::size_t echo_count(const std::map<std::string, std::string>& echo,
                              const std::string& key, std::size_t fallback) {
  auto it = echo.find(key);
  if (it == echo.end()) return fallback;
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (...) {
    return fallback;
  }
}

// Default forecast/backtest anchor: the first dev row.
inline std::size_t resolve_start_index(const RunConfig& cfg, std::size_t len,
                                       std::size_t past_history) {
  std::size_t start;
  if (cfg.start_index >= 0) {
    start = static_cast<std::size_t>(cfg.start_index);
  } else {
    start = static_cast<std::size_t>(cfg.split_ratio * static_cast<double>(len));
  }
  if (start < past_history)
    throw ArgumentError("start index " + std::to_string(start) + " leaves fewer than " +
                        std::to_string(past_history) + " rows of history");
  if (start >= len)
    throw ArgumentError("start index " + std::to_string(start) +
                        " is outside the series (length " + std::to_string(len) + ")");
  return start;
}

struct PreparedData {
  std::vector<PriceSeries> raw;
  std::vector<PriceSeries> scaled;
  std::map<std::string, Scaler> scalers;
  std::size_t dropped_rows = 0;
  WindowedDataset train_set;
  WindowedDataset dev_set;
};

inline PreparedData prepare_training_data(const RunConfig& cfg,
                                          const std::vector<std::string>& tickers,
                                          bool same_ticker_test_train,
                                          const std::string& holdout) {
  PreparedData out;
  for (const auto& ticker : tickers) {
    LoadedSeries loaded = load_series(cfg, ticker);
    out.dropped_rows += loaded.dropped_rows;
    const Scaler scaler =
        fit_scaler(loaded.raw, 0, scaler_fit_rows(cfg, loaded.raw.size()));
    out.scaled.push_back(apply_scaler(loaded.raw, scaler));
    out.scalers.emplace(ticker, scaler);
    out.raw.push_back(std::move(loaded.raw));
  }
  if (tickers.size() == 1) {
    auto windows = make_windows(out.scaled.front(), cfg.past_history, cfg.forward_look);
    auto [train_set, dev_set] = split_train_dev(windows, cfg.split_ratio);
    out.train_set = std::move(train_set);
    out.dev_set = std::move(dev_set);
  } else {
    auto [train_set, dev_set] =
        build_multistock(out.scaled, cfg.past_history, cfg.forward_look,
                         same_ticker_test_train, holdout, cfg.split_ratio);
    out.train_set = std::move(train_set);
    out.dev_set = std::move(dev_set);
  }
  return out;
}

inline Checkpoint train_one_model(const RunConfig& cfg, const PreparedData& data,
                                  std::uint64_t init_seed, std::uint64_t batch_seed) {
  NetworkSpec spec;
  spec.stack_depth = cfg.stack_depth;
  spec.units = cfg.units;
  spec.input_dim = data.scaled.front().feature_count();
  spec.forward_look = cfg.forward_look;
  spec.architecture = cfg.architecture;

  Rng init_rng(init_seed);
  NetworkParams params = init_params(spec, init_rng);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = batch_seed;
  TrainResult result = train(std::move(params), data.train_set, data.dev_set, tcfg,
                             cfg.loss_kind);

  Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.params = std::move(result.params);
  ckpt.scalers = data.scalers;
  ckpt.seed = cfg.seed;
  ckpt.config_echo = cfg.echo();
  ckpt.loss_history = std::move(result.history);
  return ckpt;
}

}  // namespace detail

// Trains per the config and writes checkpoint.json, loss_history.csv and
// metrics.txt into the output directory.
inline void cmd_train(const RunConfig& cfg) {
  cfg.train.validate();
  detail::validate_data_paths(cfg);
  if (cfg.tickers.empty()) throw ConfigError("train: no tickers configured");
  if (!cfg.same_ticker_test_train && cfg.tickers.size() > 1 && cfg.holdout_ticker.empty())
    throw ConfigError("train: holdout_ticker required when same_ticker_test_train=false");
  const auto out_dir = detail::prepare_out_dir(cfg);

  detail::PreparedData data = detail::prepare_training_data(
      cfg, cfg.tickers, cfg.same_ticker_test_train, cfg.holdout_ticker);
  Checkpoint ckpt = detail::train_one_model(cfg, data, cfg.seed, cfg.seed + 1);

  save_checkpoint(out_dir / "checkpoint.json", ckpt);
  write_text_file(out_dir / "loss_history.csv", detail::loss_history_csv(ckpt.loss_history));

  const EpochStats& last = ckpt.loss_history.back();
  std::string metrics;
  metrics += "train_windows=" + std::to_string(data.train_set.size()) + "\n";
  metrics += "dev_windows=" + std::to_string(data.dev_set.size()) + "\n";
  metrics += "dropped_rows=" + std::to_string(data.dropped_rows) + "\n";
  metrics += "loss_kind=" + to_string(cfg.loss_kind) + "\n";
  metrics += "final_train_mse=" + format_double(last.train_loss) + "\n";
  metrics += "final_train_rmse=" + format_double(std::sqrt(last.train_loss)) + "\n";
  metrics += "final_val_mse=" + format_double(last.val_loss) + "\n";
  metrics += "final_val_rmse=" + format_double(std::sqrt(last.val_loss)) + "\n";
  write_text_file(out_dir / "metrics.txt", metrics);

  std::cout << "wrote " << (out_dir / "checkpoint.json").string() << "\n"
            << "final train mse " << format_double(last.train_loss) << ", val mse "
            << format_double(last.val_loss) << "\n";
}

// Runs the configured rollout mode against a checkpoint and emits
// forecast.csv (end_date,mode,offset,scaled_pred,price_pred,truth).
inline void cmd_predict(const RunConfig& cfg) {
  if (cfg.checkpoint_path.empty()) throw ConfigError("predict: checkpoint path required");
  detail::require_file("checkpoint", cfg.checkpoint_path);
  if (cfg.tickers.empty()) throw ConfigError("predict: a ticker is required");
  detail::validate_data_paths(cfg);
  const auto out_dir = detail::prepare_out_dir(cfg);

  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
  const std::string& ticker = cfg.tickers.front();
  detail::LoadedSeries loaded = detail::load_series(cfg, ticker);
  const PriceSeries& raw = loaded.raw;

  if (ckpt.spec.input_dim != raw.feature_count())
    throw ArgumentError("predict: checkpoint expects " + std::to_string(ckpt.spec.input_dim) +
                        " features but '" + ticker + "' provides " +
                        std::to_string(raw.feature_count()));

  Scaler scaler;
  if (auto it = ckpt.scalers.find(ticker); it != ckpt.scalers.end()) {
    scaler = it->second;
  } else {
    scaler = fit_scaler(raw, 0, raw.size());
    std::cerr << "note: ticker '" << ticker
              << "' not in checkpoint scalers; scaling on its full series\n";
  }
  const PriceSeries scaled = apply_scaler(raw, scaler);
  const std::size_t past_history =
      detail::echo_count(ckpt.config_echo, "past_history", cfg.past_history);
  const ForecastMode mode = forecast_mode_from_string(cfg.predict_mode);

  std::string csv = forecast_csv_header();
  if (cfg.horizon > 0) {
    const std::size_t start = detail::resolve_start_index(cfg, raw.size(), past_history);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (mode == ForecastMode::GroundTruth) {
      ForecastSeries fc = teacher_forced_rollout(ckpt.params, scaled, scaler, start,
                                                 cfg.horizon, past_history, ticker);
      std::vector<double> truth;
      for (std::size_t k = 0; k < cfg.horizon; ++k) truth.push_back(raw.price(start + k));
      append_forecast_csv(csv, fc, 0, truth);
    } else if (mode == ForecastMode::UpdatedTruth) {
      Matrix seed(past_history, scaled.feature_count());
      for (std::size_t r = 0; r < past_history; ++r)
        for (std::size_t f = 0; f < scaled.feature_count(); ++f)
          seed(r, f) = scaled.features(start - past_history + r, f);
      std::vector<std::string> dates;
      std::vector<double> truth;
      for (std::size_t k = 0; k < cfg.horizon; ++k) {
        const std::size_t row = start + k;
        dates.push_back(row < raw.size() ? raw.dates[row] : "");
        truth.push_back(row < raw.size() ? raw.price(row) : nan);
      }
      ForecastSeries fc = autoregressive_rollout(ckpt.params, seed, cfg.horizon, scaler,
                                                 past_history, ticker, std::move(dates));
      append_forecast_csv(csv, fc, 0, truth);
    } else {
      MultidayForecast mf = multiday_rollout(ckpt.params, scaled, scaler, start, cfg.horizon,
                                             past_history, ticker);
      for (std::size_t offset = 0; offset < mf.block_len; ++offset) {
        ForecastSeries fc = select_offset(mf, offset);
        std::vector<double> truth;
        for (std::size_t k = 0; k < fc.scaled.size(); ++k) {
          const std::size_t row = start + k + offset;
          truth.push_back(row < raw.size() ? raw.price(row) : nan);
        }
        append_forecast_csv(csv, fc, offset, truth);
      }
    }
  }
  write_text_file(out_dir / "forecast.csv", csv);
  std::cout << "wrote " << (out_dir / "forecast.csv").string() << "\n";
}

// Backtests the decision algorithm and emits ledger.csv plus key=value
// summary lines on stdout.
inline void cmd_backtest(const RunConfig& cfg) {
  if (cfg.checkpoint_path.empty()) throw ConfigError("backtest: checkpoint path required");
  detail::require_file("checkpoint", cfg.checkpoint_path);
  if (cfg.tickers.empty()) throw ConfigError("backtest: a ticker is required");
  detail::validate_data_paths(cfg);
  const auto out_dir = detail::prepare_out_dir(cfg);

  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
  const std::string& ticker = cfg.tickers.front();
  detail::LoadedSeries loaded = detail::load_series(cfg, ticker);
  const PriceSeries& raw = loaded.raw;
  if (ckpt.spec.input_dim != raw.feature_count())
    throw ArgumentError("backtest: checkpoint expects " +
                        std::to_string(ckpt.spec.input_dim) + " features but '" + ticker +
                        "' provides " + std::to_string(raw.feature_count()));

  Scaler scaler;
  if (auto it = ckpt.scalers.find(ticker); it != ckpt.scalers.end()) scaler = it->second;
  else scaler = fit_scaler(raw, 0, raw.size());

  const std::size_t past_history =
      detail::echo_count(ckpt.config_echo, "past_history", cfg.past_history);
  const std::size_t start = detail::resolve_start_index(cfg, raw.size(), past_history);
  const DecisionSource source = decision_source_from_string(cfg.decision_source);

  BacktestResult result = backtest(ckpt.params, raw, scaler, start, cfg.horizon,
                                   cfg.initial_cash, source, past_history);
  write_text_file(out_dir / "ledger.csv", ledger_csv(result.ledger));

  auto join_days = [](const std::vector<std::size_t>& days) {
    std::string s;
    for (std::size_t d : days) {
      if (!s.empty()) s += ',';
      s += std::to_string(d);
    }
    return s;
  };
  std::cout << "decision_source=" << to_string(source) << "\n"
            << "initial_cash=" << format_double(cfg.initial_cash) << "\n"
            << "final_value=" << format_double(result.ledger.final_value()) << "\n"
            << "final_growth_pct=" << format_double(result.final_growth_pct) << "\n"
            << "trade_count=" << result.trade_count << "\n"
            << "buy_days=" << join_days(result.buy_days) << "\n"
            << "sell_days=" << join_days(result.sell_days) << "\n";
}

// Trains one holdout-mode model per group, then emits the holdout correlation
// matrix and the cross-industry RMSE grid.
inline void cmd_grid(const RunConfig& cfg) {
  cfg.train.validate();
  if (cfg.groups.empty()) throw ConfigError("grid: at least one group.<name> is required");
  for (const auto& g : cfg.groups)
    if (g.tickers.size() < 2)
      throw ArgumentError("grid: group '" + g.name + "' needs at least 2 tickers (holdout + trainers)");
  detail::validate_data_paths(cfg);
  const auto out_dir = detail::prepare_out_dir(cfg);

  std::vector<NetworkParams> models;
  std::vector<std::string> model_ids;
  std::vector<PriceSeries> holdout_series;
  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    const TickerGroup& group = cfg.groups[g];
    detail::PreparedData data =
        detail::prepare_training_data(cfg, group.tickers, false, group.holdout);
    // Every group trains from the same seeds, so identical groups give
    // identical models (and identical grid rows).
    Checkpoint ckpt = detail::train_one_model(cfg, data, cfg.seed, cfg.seed + 1);
    models.push_back(std::move(ckpt.params));
    model_ids.push_back(group.name);
    for (std::size_t i = 0; i < group.tickers.size(); ++i)
      if (group.tickers[i] == group.holdout) holdout_series.push_back(data.raw[i]);
    std::cout << "trained group '" << group.name << "' (holdout " << group.holdout
              << "), final val mse "
              << format_double(ckpt.loss_history.back().val_loss) << "\n";
  }

  std::string corr_csv = "ticker";
  for (const auto& s : holdout_series) corr_csv += "," + s.ticker;
  corr_csv += '\n';
  if (holdout_series.size() >= 2) {
    const CorrelationResult corr = correlation_matrix(holdout_series);
    for (std::size_t r = 0; r < holdout_series.size(); ++r) {
      corr_csv += holdout_series[r].ticker;
      for (std::size_t c = 0; c < holdout_series.size(); ++c)
        corr_csv += "," + format_double(corr.values(r, c));
      corr_csv += '\n';
    }
  } else {
    corr_csv += holdout_series.front().ticker + ",1\n";
  }
  write_text_file(out_dir / "correlation.csv", corr_csv);

  const RmseGrid grid = rmse_grid(models, holdout_series, cfg.past_history, model_ids);
  std::string grid_csv = "model";
  for (const auto& id : grid.series_ids) grid_csv += "," + id;
  grid_csv += '\n';
  for (std::size_t i = 0; i < models.size(); ++i) {
    grid_csv += grid.model_ids[i];
    for (std::size_t j = 0; j < holdout_series.size(); ++j)
      grid_csv += "," + format_double(grid.values(i, j));
    grid_csv += '\n';
  }
  write_text_file(out_dir / "rmse_grid.csv", grid_csv);

  std::cout << "wrote " << (out_dir / "correlation.csv").string() << " and "
            << (out_dir / "rmse_grid.csv").string() << "\n";
}

}  // namespace tradecast
