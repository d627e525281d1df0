// tradecast: LSTM price forecasting and end-of-day trading backtests.
//
// Subcommands: train, predict, backtest, grid. Each reads a flat key=value
// config file; --set key=value flags override file entries, and --seed /
// --out-dir are shortcuts for the keys of the same name. Exit codes:
// 0 success, 1 usage/config error, 2 data error, 3 internal error.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tradecast/tradecast.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--set", flags.overrides, "override a config key (key=value, repeatable)");
  cmd->add_option("--seed", flags.seed, "random seed (overrides config)");
  cmd->add_option("--out-dir", flags.out_dir, "output directory (overrides config)");
}

tradecast::RunConfig build_config(const CommonFlags& flags) {
  tradecast::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = tradecast::load_config(flags.config_path);
  for (const auto& entry : flags.overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw tradecast::ConfigError("--set expects key=value, got '" + entry + "'");
    tradecast::set_config_value(cfg, tradecast::trim(entry.substr(0, eq)),
                                tradecast::trim(entry.substr(eq + 1)));
  }
  if (!flags.seed.empty()) tradecast::set_config_value(cfg, "seed", flags.seed);
  if (!flags.out_dir.empty()) tradecast::set_config_value(cfg, "out_dir", flags.out_dir);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM stock forecasting and trading backtests"};
  app.require_subcommand(1);

  CommonFlags train_flags, predict_flags, backtest_flags, grid_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common_flags(train_cmd, train_flags);
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "roll a checkpoint forward and emit forecast.csv");
  add_common_flags(predict_cmd, predict_flags);
  CLI::App* backtest_cmd =
      app.add_subcommand("backtest", "simulate end-of-day trading on a checkpoint");
  add_common_flags(backtest_cmd, backtest_flags);
  CLI::App* grid_cmd =
      app.add_subcommand("grid", "cross-industry correlation and RMSE grid");
  add_common_flags(grid_cmd, grid_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) tradecast::cmd_train(build_config(train_flags));
    else if (predict_cmd->parsed()) tradecast::cmd_predict(build_config(predict_flags));
    else if (backtest_cmd->parsed()) tradecast::cmd_backtest(build_config(backtest_flags));
    else if (grid_cmd->parsed()) tradecast::cmd_grid(build_config(grid_flags));
    return 0;
  } catch (const tradecast::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const tradecast::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const tradecast::VersionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const tradecast::ArgumentError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const tradecast::IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
