#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tradecast/errors.hpp"
#include "tradecast/forecast.hpp"
#include "tradecast/bot.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/train.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

// One industry group for grid evaluation: the first ticker listed is the
// holdout, the rest train the group's model.
struct TickerGroup {
  std::string name;
  std::string holdout;
  std::vector<std::string> tickers;  // includes the holdout
};

// Full run configuration. Defaults are the tuned values: past_history 60,
// units 20, stack depth 2, 80/20 split, batch 64, 500 epochs, 200 steps per
// epoch, 50 validation steps.
struct RunConfig {
  std::size_t past_history = 60;
  std::size_t forward_look = 1;
  std::size_t stack_depth = 2;
  std::size_t units = 20;
  double split_ratio = 0.8;
  Architecture architecture = Architecture::StackedLstm;
  LossKind loss_kind = LossKind::Plain;
  TrainConfig train;

  std::string data_dir = ".";
  std::vector<std::string> tickers;
  std::string holdout_ticker;
  bool same_ticker_test_train = true;
  std::string exogenous_csv;

  std::string predict_mode = "updated_truth";
  std::string decision_source = "predicted";
  std::size_t horizon = 200;
  double initial_cash = 10000.0;
  long long start_index = -1;  // -1: first dev row (floor(split_ratio * len))

  std::uint64_t seed = 42;
  std::string out_dir = "out";
  std::string checkpoint_path;
  std::vector<TickerGroup> groups;

  std::filesystem::path csv_path(const std::string& ticker) const {
    return std::filesystem::path(data_dir) / (ticker + ".csv");
  }

  // Flat echo of every scalar key, written into checkpoints.
  std::map<std::string, std::string> echo() const {
    std::map<std::string, std::string> m;
    m["past_history"] = std::to_string(past_history);
    m["forward_look"] = std::to_string(forward_look);
    m["stack_depth"] = std::to_string(stack_depth);
    m["units"] = std::to_string(units);
    m["split_ratio"] = format_double(split_ratio);
    m["architecture"] = to_string(architecture);
    m["loss_kind"] = to_string(loss_kind);
    m["batch_size"] = std::to_string(train.batch_size);
    m["epochs"] = std::to_string(train.epochs);
    m["steps_per_epoch"] = std::to_string(train.steps_per_epoch);
    m["validation_steps"] = std::to_string(train.validation_steps);
    m["learning_rate"] = format_double(train.learning_rate);
    m["beta1"] = format_double(train.beta1);
    m["beta2"] = format_double(train.beta2);
    m["epsilon"] = format_double(train.epsilon);
    m["clip_norm"] = format_double(train.clip_norm);
    m["seed"] = std::to_string(seed);
    std::string joined;
    for (const auto& t : tickers) {
      if (!joined.empty()) joined += ',';
      joined += t;
    }
    m["tickers"] = joined;
    m["holdout_ticker"] = holdout_ticker;
    m["same_ticker_test_train"] = same_ticker_test_train ? "true" : "false";
    return m;
  }
};

namespace detail {

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    const long long v = std::stoll(value);
    if (v < 0) throw ConfigError(key + ": must be nonnegative, got " + value);
    return static_cast<std::size_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError(key + ": not an integer: '" + value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double(value, v)) throw ConfigError(key + ": not a number: '" + value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

inline std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : split(value, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

// Applies one key=value entry; CLI overrides reuse this, so flags and file
// entries accept identical keys.
inline void set_config_value(RunConfig& cfg, const std::string& key,
                             const std::string& value) {
  using detail::parse_bool;
  using detail::parse_count;
  using detail::parse_list;
  using detail::parse_real;

  if (key == "past_history") cfg.past_history = parse_count(key, value);
  else if (key == "forward_look") cfg.forward_look = parse_count(key, value);
  else if (key == "stack_depth") cfg.stack_depth = parse_count(key, value);
  else if (key == "units") cfg.units = parse_count(key, value);
  else if (key == "split_ratio") cfg.split_ratio = parse_real(key, value);
  else if (key == "architecture") {
    try {
      cfg.architecture = architecture_from_string(value);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "loss_kind") {
    try {
      cfg.loss_kind = loss_kind_from_string(value);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "batch_size") cfg.train.batch_size = parse_count(key, value);
  else if (key == "epochs") cfg.train.epochs = parse_count(key, value);
  else if (key == "steps_per_epoch") cfg.train.steps_per_epoch = parse_count(key, value);
  else if (key == "validation_steps") cfg.train.validation_steps = parse_count(key, value);
  else if (key == "learning_rate") cfg.train.learning_rate = parse_real(key, value);
  else if (key == "beta1") cfg.train.beta1 = parse_real(key, value);
  else if (key == "beta2") cfg.train.beta2 = parse_real(key, value);
  else if (key == "epsilon") cfg.train.epsilon = parse_real(key, value);
  else if (key == "clip_norm") cfg.train.clip_norm = parse_real(key, value);
  else if (key == "data_dir") cfg.data_dir = value;
  else if (key == "ticker") cfg.tickers = {trim(value)};
  else if (key == "tickers") cfg.tickers = parse_list(value);
  else if (key == "holdout_ticker") cfg.holdout_ticker = trim(value);
  else if (key == "same_ticker_test_train") cfg.same_ticker_test_train = parse_bool(key, value);
  else if (key == "exogenous_csv") cfg.exogenous_csv = value;
  else if (key == "predict_mode") cfg.predict_mode = trim(value);
  else if (key == "decision_source") cfg.decision_source = trim(value);
  else if (key == "horizon") cfg.horizon = parse_count(key, value);
  else if (key == "initial_cash") cfg.initial_cash = parse_real(key, value);
  else if (key == "start_index") {
    try {
      cfg.start_index = std::stoll(value);
    } catch (...) {
      throw ConfigError(key + ": not an integer: '" + value + "'");
    }
  } else if (key == "seed") {
    try {
      cfg.seed = std::stoull(value);
    } catch (...) {
      throw ConfigError(key + ": not an integer: '" + value + "'");
    }
  } else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "checkpoint") cfg.checkpoint_path = value;
  else if (key.rfind("group.", 0) == 0) {
    TickerGroup g;
    g.name = key.substr(6);
    if (g.name.empty()) throw ConfigError("group key needs a name: 'group.<name>'");
    g.tickers = parse_list(value);
    if (g.tickers.empty()) throw ConfigError("group." + g.name + ": empty ticker list");
    g.holdout = g.tickers.front();
    cfg.groups.push_back(std::move(g));
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

// Flat key=value file; '#' starts a comment, blank lines are skipped.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  const auto lines = split(text, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string line = lines[ln];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(ln + 1) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(ln + 1) + ": empty key");
    set_config_value(cfg, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text);
}

}  // namespace tradecast
