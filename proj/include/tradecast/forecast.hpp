#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/matrix.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

enum class ForecastMode { GroundTruth, UpdatedTruth, Multiday };

inline std::string to_string(ForecastMode m) {
  switch (m) {
    case ForecastMode::GroundTruth: return "ground_truth";
    case ForecastMode::UpdatedTruth: return "updated_truth";
    default: return "multiday";
  }
}

inline ForecastMode forecast_mode_from_string(const std::string& s) {
  if (s == "ground_truth") return ForecastMode::GroundTruth;
  if (s == "updated_truth") return ForecastMode::UpdatedTruth;
  if (s == "multiday") return ForecastMode::Multiday;
  throw ArgumentError("unknown forecast mode: '" + s + "'");
}

// One prediction per horizon step, in scaled units and de-normalized prices.
// `end_dates` names the day each prediction is for; entries are empty when the
// day lies beyond the known series.
struct ForecastSeries {
  ForecastMode mode = ForecastMode::GroundTruth;
  std::string model_id;
  std::size_t horizon = 0;
  std::vector<std::string> end_dates;
  std::vector<double> scaled;
  std::vector<double> price;
};

// Reference mode: prediction k consumes the true window ending at
// start_index + k - 1, so every step sees ground truth. Infeasible live.
inline ForecastSeries teacher_forced_rollout(const NetworkParams& params,
                                             const PriceSeries& scaled,
                                             const Scaler& scaler, std::size_t start_index,
                                             std::size_t horizon, std::size_t past_history,
                                             std::string model_id = "") {
  ForecastSeries out;
  out.mode = ForecastMode::GroundTruth;
  out.model_id = std::move(model_id);
  out.horizon = horizon;
  if (horizon == 0) return out;
  if (start_index < past_history)
    throw ArgumentError("teacher_forced_rollout: needs " + std::to_string(past_history) +
                        " rows of history before index " + std::to_string(start_index));
  if (start_index + horizon > scaled.size())
    throw ArgumentError("teacher_forced_rollout: horizon " + std::to_string(horizon) +
                        " runs past the end of the series");

  for (std::size_t k = 0; k < horizon; ++k) {
    Matrix window(past_history, scaled.feature_count());
    const std::size_t base = start_index + k - past_history;
    for (std::size_t r = 0; r < past_history; ++r)
      for (std::size_t f = 0; f < scaled.feature_count(); ++f)
        window(r, f) = scaled.features(base + r, f);
    const Matrix pred = predict_window(params, window);
    out.scaled.push_back(pred[0]);
    out.price.push_back(scaler.inverse(pred[0], 0));
    out.end_dates.push_back(scaled.dates[start_index + k]);
  }
  return out;
}

// Rollout driven by an arbitrary one-step predictor; each step drops the
// oldest window row and appends the prediction in the price column, freezing
// any exogenous columns at their last observed value.
template <typename StepFn>  // StepFn: (const Matrix& window) -> double (scaled price)
ForecastSeries autoregressive_rollout_with(StepFn&& step, const Matrix& seed_window,
                                           std::size_t horizon, const Scaler& scaler,
                                           std::string model_id = "",
                                           std::vector<std::string> dates = {}) {
  if (seed_window.rows() == 0 || seed_window.cols() == 0)
    throw ArgumentError("autoregressive_rollout: empty seed window");
  if (!dates.empty() && dates.size() != horizon)
    throw ArgumentError("autoregressive_rollout: " + std::to_string(dates.size()) +
                        " dates for horizon " + std::to_string(horizon));

  ForecastSeries out;
  out.mode = ForecastMode::UpdatedTruth;
  out.model_id = std::move(model_id);
  out.horizon = horizon;

  Matrix window = seed_window;
  const std::size_t rows = window.rows();
  const std::size_t cols = window.cols();
  for (std::size_t k = 0; k < horizon; ++k) {
    const double pred = step(static_cast<const Matrix&>(window));
    out.scaled.push_back(pred);
    out.price.push_back(scaler.inverse(pred, 0));
    out.end_dates.push_back(dates.empty() ? std::string() : dates[k]);
    // Shift up one row; the new last row carries the prediction and repeats
    // the exogenous features of the previous last row.
    for (std::size_t r = 0; r + 1 < rows; ++r)
      for (std::size_t f = 0; f < cols; ++f) window(r, f) = window(r + 1, f);
    window(rows - 1, 0) = pred;
  }
  return out;
}

// Deployable mode: predictions feed back into the window one day at a time.
// The seed must have exactly the model's past_history rows.
inline ForecastSeries autoregressive_rollout(const NetworkParams& params,
                                             const Matrix& seed_window, std::size_t horizon,
                                             const Scaler& scaler,
                                             std::size_t past_history,
                                             std::string model_id = "",
                                             std::vector<std::string> dates = {}) {
  if (seed_window.rows() != past_history)
    throw ArgumentError("autoregressive_rollout: seed window has " +
                        std::to_string(seed_window.rows()) + " rows, expected " +
                        std::to_string(past_history));
  return autoregressive_rollout_with(
      [&params](const Matrix& window) { return predict_window(params, window)[0]; },
      seed_window, horizon, scaler, std::move(model_id), std::move(dates));
}

// Full n-day blocks emitted while the true history advances one day at a
// time. Block k comes from the true window ending at start_index + k - 1 and
// covers target rows start_index + k ... start_index + k + n - 1.
struct MultidayForecast {
  std::string model_id;
  std::size_t block_len = 0;    // n = the model's forward_look
  std::size_t start_index = 0;  // series row of the first block's first target
  std::vector<std::vector<double>> scaled_blocks;  // [emission][offset]
  std::vector<std::vector<double>> price_blocks;
  std::vector<std::string> target_dates;  // rows start_index .. start_index+E+n-2; "" past the series end
};

inline MultidayForecast multiday_rollout(const NetworkParams& params,
                                         const PriceSeries& scaled, const Scaler& scaler,
                                         std::size_t start_index, std::size_t total_horizon,
                                         std::size_t past_history,
                                         std::string model_id = "") {
  MultidayForecast out;
  out.model_id = std::move(model_id);
  out.block_len = params.spec.forward_look;
  out.start_index = start_index;
  if (total_horizon == 0) return out;
  if (start_index < past_history)
    throw ArgumentError("multiday_rollout: needs " + std::to_string(past_history) +
                        " rows of history before index " + std::to_string(start_index));
  if (start_index + total_horizon - 1 > scaled.size())
    throw ArgumentError("multiday_rollout: not enough true data for " +
                        std::to_string(total_horizon) + " emissions");

  for (std::size_t k = 0; k < total_horizon; ++k) {
    Matrix window(past_history, scaled.feature_count());
    const std::size_t base = start_index + k - past_history;
    for (std::size_t r = 0; r < past_history; ++r)
      for (std::size_t f = 0; f < scaled.feature_count(); ++f)
        window(r, f) = scaled.features(base + r, f);
    const Matrix pred = predict_window(params, window);
    std::vector<double> block(pred.values().begin(), pred.values().end());
    out.price_blocks.push_back(inverse_scale(block, scaler, 0));
    out.scaled_blocks.push_back(std::move(block));
  }
  for (std::size_t r = 0; r + 1 < total_horizon + out.block_len; ++r) {
    const std::size_t row = start_index + r;
    out.target_dates.push_back(row < scaled.size() ? scaled.dates[row] : std::string());
  }
  return out;
}

// The per-day series formed by taking every block's element at one offset.
inline ForecastSeries select_offset(const MultidayForecast& mf, std::size_t offset) {
  if (offset >= mf.block_len)
    throw ArgumentError("select_offset: offset " + std::to_string(offset) +
                        " out of range for block length " + std::to_string(mf.block_len));
  ForecastSeries out;
  out.mode = ForecastMode::Multiday;
  out.model_id = mf.model_id;
  out.horizon = mf.scaled_blocks.size();
  for (std::size_t k = 0; k < mf.scaled_blocks.size(); ++k) {
    out.scaled.push_back(mf.scaled_blocks[k][offset]);
    out.price.push_back(mf.price_blocks[k][offset]);
    out.end_dates.push_back(mf.target_dates[k + offset]);
  }
  return out;
}

// Mean absolute error per days-ahead offset, over all blocks; element 0 is
// the nearest predicted day.
inline std::vector<double> convergence_profile(const MultidayForecast& mf,
                                               const PriceSeries& scaled_truth) {
  if (mf.scaled_blocks.empty())
    throw ArgumentError("convergence_profile: no blocks");
  const std::size_t last_row = mf.start_index + mf.scaled_blocks.size() - 1 + mf.block_len;
  if (last_row > scaled_truth.size())
    throw ArgumentError("convergence_profile: truth series too short for the blocks");

  std::vector<double> profile(mf.block_len, 0.0);
  for (std::size_t k = 0; k < mf.scaled_blocks.size(); ++k)
    for (std::size_t j = 0; j < mf.block_len; ++j)
      profile[j] +=
          std::abs(mf.scaled_blocks[k][j] - scaled_truth.price(mf.start_index + k + j));
  for (double& v : profile) v /= static_cast<double>(mf.scaled_blocks.size());
  return profile;
}

inline double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw ArgumentError("mse: need equal nonempty inputs, got " +
                        std::to_string(pred.size()) + " and " + std::to_string(truth.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  return std::sqrt(mse(pred, truth));
}

struct RmseGrid {
  Matrix values;  // entry (i, j): model i rolled out on series j
  std::vector<std::string> model_ids;
  std::vector<std::string> series_ids;
};

// Cross-evaluation grid: every model forecasts every held-out series with an
// updated-truth rollout seeded on the series' first past_history rows. Each
// series is scaled with its own full-range scaler; errors are scaled-unit
// RMSE over the remaining rows.
inline RmseGrid rmse_grid(const std::vector<NetworkParams>& models,
                          const std::vector<PriceSeries>& raw_series,
                          std::size_t past_history,
                          std::vector<std::string> model_ids = {}) {
  if (models.empty() || raw_series.empty())
    throw ArgumentError("rmse_grid: needs at least one model and one series");

  RmseGrid out;
  out.values = Matrix(models.size(), raw_series.size());
  if (model_ids.empty())
    for (std::size_t i = 0; i < models.size(); ++i)
      out.model_ids.push_back("model" + std::to_string(i));
  else
    out.model_ids = std::move(model_ids);
  for (const auto& s : raw_series) out.series_ids.push_back(s.ticker);

  for (std::size_t j = 0; j < raw_series.size(); ++j) {
    const PriceSeries& raw = raw_series[j];
    if (raw.size() < past_history + 1)
      throw ArgumentError("rmse_grid: series '" + raw.ticker + "' shorter than past_history + 1");
    const Scaler scaler = fit_scaler(raw, 0, raw.size());
    const PriceSeries scaled = apply_scaler(raw, scaler);
    const std::size_t horizon = scaled.size() - past_history;

    Matrix seed(past_history, scaled.feature_count());
    for (std::size_t r = 0; r < past_history; ++r)
      for (std::size_t f = 0; f < scaled.feature_count(); ++f)
        seed(r, f) = scaled.features(r, f);
    std::vector<double> truth;
    truth.reserve(horizon);
    for (std::size_t r = past_history; r < scaled.size(); ++r)
      truth.push_back(scaled.price(r));

    for (std::size_t i = 0; i < models.size(); ++i) {
      if (models[i].spec.input_dim != scaled.feature_count())
        throw ArgumentError("rmse_grid: model " + out.model_ids[i] + " expects " +
                            std::to_string(models[i].spec.input_dim) +
                            " features but series '" + raw.ticker + "' has " +
                            std::to_string(scaled.feature_count()));
      const ForecastSeries fc = autoregressive_rollout(models[i], seed, horizon, scaler,
                                                       past_history, out.model_ids[i]);
      out.values(i, j) = rmse(fc.scaled, truth);
    }
  }
  return out;
}

// Plot-ready emission: end_date,mode,offset,scaled_pred,price_pred,truth.
// The truth column carries the de-normalized price when known, else is empty.
inline std::string forecast_csv_header() {
  return "end_date,mode,offset,scaled_pred,price_pred,truth\n";
}

inline void append_forecast_csv(std::string& out, const ForecastSeries& fc,
                                std::size_t offset,
                                const std::vector<double>& truth_prices) {
  for (std::size_t k = 0; k < fc.scaled.size(); ++k) {
    out += fc.end_dates.size() > k ? fc.end_dates[k] : "";
    out += ',';
    out += to_string(fc.mode);
    out += ',';
    out += std::to_string(offset);
    out += ',';
    out += format_double(fc.scaled[k]);
    out += ',';
    out += format_double(fc.price[k]);
    out += ',';
    if (k < truth_prices.size() && std::isfinite(truth_prices[k]))
      out += format_double(truth_prices[k]);
    out += '\n';
  }
}

}  // namespace tradecast
