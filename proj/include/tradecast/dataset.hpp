#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tradecast/errors.hpp"
#include "tradecast/matrix.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

// ISO YYYY-MM-DD check; ISO strings order correctly under lexicographic
// comparison, so dates stay plain strings throughout.
inline bool is_valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Dated per-ticker feature table. Column 0 of `features` is the adjusted
// closing price; further columns are exogenous signals attached later.
struct PriceSeries {
  std::string ticker;
  std::vector<std::string> dates;        // strictly increasing ISO dates
  Matrix features;                       // dates.size() x feature_count
  std::vector<std::string> feature_names;

  std::size_t size() const { return dates.size(); }
  std::size_t feature_count() const { return features.cols(); }
  double price(std::size_t row) const { return features(row, 0); }
};

struct CsvParse {
  PriceSeries series;
  std::size_t dropped_rows = 0;
};

namespace detail {

inline std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

struct DatedRow {
  std::string date;
  std::vector<double> values;
};

inline PriceSeries assemble_series(std::string_view ticker, std::vector<DatedRow> rows,
                                   std::vector<std::string> names,
                                   std::size_t* dropped) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DatedRow& a, const DatedRow& b) { return a.date < b.date; });
  // Duplicate dates keep the first occurrence; the rest count as dropped.
  std::vector<DatedRow> unique;
  unique.reserve(rows.size());
  for (auto& row : rows) {
    if (!unique.empty() && unique.back().date == row.date) {
      ++*dropped;
      continue;
    }
    unique.push_back(std::move(row));
  }
  PriceSeries out;
  out.ticker = std::string(ticker);
  out.feature_names = std::move(names);
  out.features = Matrix(unique.size(), out.feature_names.size());
  out.dates.reserve(unique.size());
  for (std::size_t r = 0; r < unique.size(); ++r) {
    out.dates.push_back(std::move(unique[r].date));
    for (std::size_t c = 0; c < out.feature_names.size(); ++c)
      out.features(r, c) = unique[r].values[c];
  }
  return out;
}

}  // namespace detail

// Parses a Yahoo!-style OHLCV export (`Date,Open,High,Low,Close,Adj Close,
// Volume`; column order is free, extra columns are ignored). Keeps the
// adjusted close as the single price feature. Rows whose Adj Close cell is
// empty or non-numeric are dropped and counted.
inline CsvParse parse_ohlcv_csv(const std::string& text, std::string_view ticker = "") {
  const auto lines = detail::csv_lines(text);
  if (lines.empty()) throw FormatError("ohlcv csv: empty input");

  const auto header = split(lines[0], ',');
  std::size_t date_col = header.size();
  std::size_t close_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "Date") date_col = c;
    if (name == "Adj Close") close_col = c;
  }
  if (date_col == header.size()) throw FormatError("ohlcv csv: missing required column: Date");
  if (close_col == header.size())
    throw FormatError("ohlcv csv: missing required column: Adj Close");

  CsvParse out;
  std::vector<detail::DatedRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto cells = split(lines[ln], ',');
    if (cells.size() <= std::max(date_col, close_col)) {
      ++out.dropped_rows;
      continue;
    }
    const std::string date = trim(cells[date_col]);
    if (!is_valid_iso_date(date))
      throw FormatError("ohlcv csv: row " + std::to_string(ln + 1) +
                        ": unparseable date '" + date + "'");
    double close = 0.0;
    if (!parse_double(cells[close_col], close)) {
      ++out.dropped_rows;
      continue;
    }
    rows.push_back({date, {close}});
  }
  out.series =
      detail::assemble_series(ticker, std::move(rows), {"adj_close"}, &out.dropped_rows);
  return out;
}

// Parses a `Date,<name1>,<name2>,...` table (exogenous signals). Rows with
// any empty or non-numeric value are dropped and counted.
inline CsvParse parse_feature_csv(const std::string& text, std::string_view label = "") {
  const auto lines = detail::csv_lines(text);
  if (lines.empty()) throw FormatError("feature csv: empty input");

  const auto header = split(lines[0], ',');
  if (header.empty() || trim(header[0]) != "Date")
    throw FormatError("feature csv: first column must be Date");
  if (header.size() < 2) throw FormatError("feature csv: needs at least one value column");
  std::vector<std::string> names;
  for (std::size_t c = 1; c < header.size(); ++c) names.push_back(trim(header[c]));

  CsvParse out;
  std::vector<detail::DatedRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto cells = split(lines[ln], ',');
    if (cells.size() != header.size()) {
      ++out.dropped_rows;
      continue;
    }
    const std::string date = trim(cells[0]);
    if (!is_valid_iso_date(date))
      throw FormatError("feature csv: row " + std::to_string(ln + 1) +
                        ": unparseable date '" + date + "'");
    detail::DatedRow row{date, {}};
    bool ok = true;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        ok = false;
        break;
      }
      row.values.push_back(v);
    }
    if (!ok) {
      ++out.dropped_rows;
      continue;
    }
    rows.push_back(std::move(row));
  }
  out.series =
      detail::assemble_series(label, std::move(rows), std::move(names), &out.dropped_rows);
  return out;
}

// Per-feature min-max transform. Fitted on the training range only so dev
// targets never leak into the scale; values outside the fit range may map
// outside [0, 1], which is fine.
struct Scaler {
  std::vector<double> feature_min;
  std::vector<double> feature_max;

  std::size_t feature_count() const { return feature_min.size(); }
  bool degenerate(std::size_t f) const { return feature_max[f] == feature_min[f]; }

  double transform(double x, std::size_t f) const {
    if (degenerate(f)) return 0.0;
    return (x - feature_min[f]) / (feature_max[f] - feature_min[f]);
  }
  double inverse(double s, std::size_t f) const {
    if (degenerate(f)) return feature_min[f];
    return s * (feature_max[f] - feature_min[f]) + feature_min[f];
  }
};

// Min/max over rows [begin, end).
inline Scaler fit_scaler(const PriceSeries& series, std::size_t begin, std::size_t end) {
  if (begin >= end || end > series.size())
    throw ArgumentError("fit_scaler: empty or out-of-range fit range [" +
                        std::to_string(begin) + ", " + std::to_string(end) + ") for series of length " +
                        std::to_string(series.size()));
  Scaler s;
  s.feature_min.assign(series.feature_count(), 0.0);
  s.feature_max.assign(series.feature_count(), 0.0);
  for (std::size_t f = 0; f < series.feature_count(); ++f) {
    double lo = series.features(begin, f);
    double hi = lo;
    for (std::size_t r = begin + 1; r < end; ++r) {
      lo = std::min(lo, series.features(r, f));
      hi = std::max(hi, series.features(r, f));
    }
    s.feature_min[f] = lo;
    s.feature_max[f] = hi;
  }
  return s;
}

inline PriceSeries apply_scaler(const PriceSeries& series, const Scaler& scaler) {
  if (scaler.feature_count() != series.feature_count())
    throw ShapeError("apply_scaler: scaler has " + std::to_string(scaler.feature_count()) +
                     " features, series has " + std::to_string(series.feature_count()));
  PriceSeries out = series;
  for (std::size_t r = 0; r < out.size(); ++r)
    for (std::size_t f = 0; f < out.feature_count(); ++f)
      out.features(r, f) = scaler.transform(series.features(r, f), f);
  return out;
}

inline std::vector<double> inverse_scale(std::span<const double> values,
                                         const Scaler& scaler, std::size_t feature) {
  if (feature >= scaler.feature_count())
    throw ShapeError("inverse_scale: feature index " + std::to_string(feature) +
                     " out of range");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(scaler.inverse(v, feature));
  return out;
}

// One supervised pair: `input` holds past_history rows of scaled features,
// `target` the next forward_look scaled closing prices.
struct Window {
  Matrix input;    // past_history x feature_count
  Matrix target;   // forward_look x 1
  std::string ticker;
  std::string end_date;                  // date of the last input row
  std::vector<std::string> target_dates; // dates of the target days
};

struct WindowedDataset {
  std::vector<Window> windows;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  const Window& operator[](std::size_t i) const { return windows[i]; }
};

// Moving-window pairs: window k covers rows [k, k+past_history) and targets
// rows [k+past_history, k+past_history+forward_look). Yields
// len - past_history - forward_look + 1 windows.
inline WindowedDataset make_windows(const PriceSeries& scaled, std::size_t past_history,
                                    std::size_t forward_look) {
  if (past_history < 1 || forward_look < 1)
    throw ArgumentError("make_windows: past_history and forward_look must be >= 1");
  const std::size_t min_len = past_history + forward_look;
  if (scaled.size() < min_len)
    throw ArgumentError("make_windows: series '" + scaled.ticker + "' has " +
                        std::to_string(scaled.size()) + " rows, needs at least " +
                        std::to_string(min_len));
  WindowedDataset out;
  const std::size_t count = scaled.size() - min_len + 1;
  out.windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Window w;
    w.input = Matrix(past_history, scaled.feature_count());
    for (std::size_t r = 0; r < past_history; ++r)
      for (std::size_t f = 0; f < scaled.feature_count(); ++f)
        w.input(r, f) = scaled.features(k + r, f);
    w.target = Matrix(forward_look, 1);
    for (std::size_t j = 0; j < forward_look; ++j) {
      w.target[j] = scaled.features(k + past_history + j, 0);
      w.target_dates.push_back(scaled.dates[k + past_history + j]);
    }
    w.ticker = scaled.ticker;
    w.end_date = scaled.dates[k + past_history - 1];
    out.windows.push_back(std::move(w));
  }
  return out;
}

// Chronological split on window end-date: the first floor(ratio * N) windows
// train, the rest are the dev set. No shuffling across the boundary.
inline std::pair<WindowedDataset, WindowedDataset> split_train_dev(const WindowedDataset& ds,
                                                                   double ratio) {
  if (!(ratio > 0.0) || !(ratio < 1.0))
    throw ArgumentError("split_train_dev: ratio must be in (0, 1), got " +
                        format_double(ratio));
  std::vector<Window> ordered = ds.windows;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Window& a, const Window& b) { return a.end_date < b.end_date; });
  const auto n_train =
      static_cast<std::size_t>(ratio * static_cast<double>(ordered.size()));
  WindowedDataset train, dev;
  train.windows.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(n_train));
  dev.windows.assign(ordered.begin() + static_cast<std::ptrdiff_t>(n_train), ordered.end());
  return {std::move(train), std::move(dev)};
}

// Pooled multi-ticker dataset. With same_ticker_test_train=true each ticker
// is split chronologically and the pieces pooled, so both sets see every
// ticker. With the flag false the holdout ticker's windows form the entire
// dev set and never enter training. Series must already be scaled per ticker.
inline std::pair<WindowedDataset, WindowedDataset> build_multistock(
    const std::vector<PriceSeries>& scaled_list, std::size_t past_history,
    std::size_t forward_look, bool same_ticker_test_train,
    const std::string& holdout_ticker = "", double split_ratio = 0.8) {
  if (scaled_list.size() < 2)
    throw ArgumentError("build_multistock: needs at least 2 tickers, got " +
                        std::to_string(scaled_list.size()));
  WindowedDataset train, dev;
  if (same_ticker_test_train) {
    for (const auto& series : scaled_list) {
      auto [tr, dv] = split_train_dev(make_windows(series, past_history, forward_look),
                                      split_ratio);
      for (auto& w : tr.windows) train.windows.push_back(std::move(w));
      for (auto& w : dv.windows) dev.windows.push_back(std::move(w));
    }
  } else {
    if (holdout_ticker.empty())
      throw ArgumentError("build_multistock: holdout ticker required when "
                          "same_ticker_test_train is false");
    bool found = false;
    for (const auto& series : scaled_list) {
      auto windows = make_windows(series, past_history, forward_look);
      if (series.ticker == holdout_ticker) {
        found = true;
        for (auto& w : windows.windows) dev.windows.push_back(std::move(w));
      } else {
        for (auto& w : windows.windows) train.windows.push_back(std::move(w));
      }
    }
    if (!found)
      throw ArgumentError("build_multistock: holdout ticker '" + holdout_ticker +
                          "' not in the series list");
  }
  return {std::move(train), std::move(dev)};
}

struct JoinResult {
  PriceSeries series;
  std::size_t dropped_left = 0;   // base rows without a matching exogenous date
  std::size_t dropped_right = 0;  // exogenous rows without a matching base date
};

// Inner-join on dates: the result keeps only dates present in both tables and
// widens the feature matrix by the exogenous columns. No fill-forward; absent
// exogenous values drop the day rather than being invented.
inline JoinResult attach_exogenous(const PriceSeries& series, const PriceSeries& exo) {
  if (exo.feature_count() < 1 || exo.size() == 0)
    throw ArgumentError("attach_exogenous: exogenous table has no data");

  std::map<std::string, std::size_t> exo_rows;
  for (std::size_t r = 0; r < exo.size(); ++r) exo_rows.emplace(exo.dates[r], r);

  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t r = 0; r < series.size(); ++r) {
    auto it = exo_rows.find(series.dates[r]);
    if (it != exo_rows.end()) matches.emplace_back(r, it->second);
  }
  if (matches.empty())
    throw ArgumentError("attach_exogenous: no common dates between '" + series.ticker +
                        "' and the exogenous table");

  JoinResult out;
  out.dropped_left = series.size() - matches.size();
  out.dropped_right = exo.size() - matches.size();
  out.series.ticker = series.ticker;
  out.series.feature_names = series.feature_names;
  for (const auto& name : exo.feature_names) out.series.feature_names.push_back(name);
  out.series.features = Matrix(matches.size(), series.feature_count() + exo.feature_count());
  out.series.dates.reserve(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto [sr, er] = matches[k];
    out.series.dates.push_back(series.dates[sr]);
    for (std::size_t f = 0; f < series.feature_count(); ++f)
      out.series.features(k, f) = series.features(sr, f);
    for (std::size_t f = 0; f < exo.feature_count(); ++f)
      out.series.features(k, series.feature_count() + f) = exo.features(er, f);
  }
  return out;
}

struct CorrelationResult {
  Matrix values;  // n x n, symmetric, unit diagonal for well-defined entries
  std::vector<std::pair<std::size_t, std::size_t>> undefined;  // zero-variance pairs, stored as 0
};

// Pearson correlation of adjusted closes over the date intersection of all
// series. A constant series has no defined correlation; affected entries are
// stored as 0 and reported in `undefined`.
inline CorrelationResult correlation_matrix(const std::vector<PriceSeries>& series_list) {
  const std::size_t n = series_list.size();
  if (n < 2) throw ArgumentError("correlation_matrix: needs at least 2 series");

  std::map<std::string, std::size_t> date_counts;
  for (const auto& s : series_list) {
    std::set<std::string> seen(s.dates.begin(), s.dates.end());
    for (const auto& d : seen) ++date_counts[d];
  }
  std::vector<std::string> common;
  for (const auto& [date, count] : date_counts)
    if (count == n) common.push_back(date);
  if (common.size() < 2)
    throw ArgumentError("correlation_matrix: date intersection has " +
                        std::to_string(common.size()) + " rows, needs at least 2");

  // Aligned price rows per series over the (sorted) common dates.
  std::vector<std::vector<double>> aligned(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::map<std::string, double> by_date;
    for (std::size_t r = 0; r < series_list[s].size(); ++r)
      by_date.emplace(series_list[s].dates[r], series_list[s].price(r));
    aligned[s].reserve(common.size());
    for (const auto& d : common) aligned[s].push_back(by_date.at(d));
  }

  const std::size_t len = common.size();
  std::vector<double> mean(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (double v : aligned[s]) mean[s] += v;
    mean[s] /= static_cast<double>(len);
  }
  std::vector<double> var(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (double v : aligned[s]) var[s] += (v - mean[s]) * (v - mean[s]);

  CorrelationResult out;
  out.values = Matrix(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      if (var[a] == 0.0 || var[b] == 0.0) {
        out.values(a, b) = out.values(b, a) = 0.0;
        out.undefined.emplace_back(a, b);
        continue;
      }
      if (a == b) {
        out.values(a, b) = 1.0;
        continue;
      }
      double cov = 0.0;
      for (std::size_t r = 0; r < len; ++r)
        cov += (aligned[a][r] - mean[a]) * (aligned[b][r] - mean[b]);
      out.values(a, b) = out.values(b, a) = cov / std::sqrt(var[a] * var[b]);
    }
  }
  return out;
}

}  // namespace tradecast
