#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/train.hpp"
#include "tradecast/util.hpp"

namespace tradecast {

// Versioned, self-describing model document: the architecture spec, every
// parameter tensor with its shape, the per-ticker scalers, the training seed,
// a flat echo of the run configuration, and the loss history. Stored as JSON
// with shortest-round-trip decimal floats, so a load reproduces predictions
// bit for bit.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  NetworkSpec spec;
  NetworkParams params;
  std::map<std::string, Scaler> scalers;  // keyed by ticker
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config_echo;
  std::vector<EpochStats> loss_history;
};

namespace detail {

inline nlohmann::json tensor_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.values().begin(), m.values().end());
  return j;
}

inline Matrix tensor_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw FormatError("checkpoint: tensor '" + field + "' missing rows/cols/data");
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols)
    throw FormatError("checkpoint: tensor '" + field + "' declares " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " but carries " +
                      std::to_string(data.size()) + " values");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < data.size(); ++i) m[i] = data[i];
  return m;
}

inline nlohmann::json layer_to_json(const LstmLayerParams& layer) {
  static constexpr const char* kNames[12] = {"w_f", "w_i", "w_o", "w_c", "u_f", "u_i",
                                             "u_o", "u_c", "b_f", "b_i", "b_o", "b_c"};
  nlohmann::json j;
  auto tensors = layer.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) j[kNames[t]] = tensor_to_json(*tensors[t]);
  return j;
}

inline LstmLayerParams layer_from_json(const nlohmann::json& j, const std::string& where) {
  static constexpr const char* kNames[12] = {"w_f", "w_i", "w_o", "w_c", "u_f", "u_i",
                                             "u_o", "u_c", "b_f", "b_i", "b_o", "b_c"};
  LstmLayerParams layer;
  auto tensors = layer.tensors();
  for (std::size_t t = 0; t < 12; ++t) {
    if (!j.contains(kNames[t]))
      throw FormatError("checkpoint: " + where + " missing tensor '" + kNames[t] + "'");
    *tensors[t] = tensor_from_json(j.at(kNames[t]), where + "." + kNames[t]);
  }
  return layer;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  for (const Matrix* t : ckpt.params.tensors())
    if (!t->all_finite()) throw StateError("save_checkpoint: non-finite parameter tensor");

  nlohmann::json j;
  j["format"] = "tradecast-checkpoint";
  j["version"] = Checkpoint::kFormatVersion;
  j["spec"] = {{"architecture", to_string(ckpt.spec.architecture)},
               {"stack_depth", ckpt.spec.stack_depth},
               {"units", ckpt.spec.units},
               {"input_dim", ckpt.spec.input_dim},
               {"forward_look", ckpt.spec.forward_look}};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : ckpt.params.layers) layers.push_back(detail::layer_to_json(layer));
  nlohmann::json decoder = nlohmann::json::array();
  for (const auto& layer : ckpt.params.decoder) decoder.push_back(detail::layer_to_json(layer));
  j["tensors"] = {{"layers", std::move(layers)},
                  {"decoder", std::move(decoder)},
                  {"dense_w", detail::tensor_to_json(ckpt.params.dense_w)},
                  {"dense_b", detail::tensor_to_json(ckpt.params.dense_b)}};
  nlohmann::json scalers = nlohmann::json::object();
  for (const auto& [ticker, scaler] : ckpt.scalers)
    scalers[ticker] = {{"min", scaler.feature_min}, {"max", scaler.feature_max}};
  j["scalers"] = std::move(scalers);
  j["seed"] = ckpt.seed;
  j["config"] = ckpt.config_echo;
  nlohmann::json history = nlohmann::json::array();
  for (const EpochStats& e : ckpt.loss_history)
    history.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  j["loss_history"] = std::move(history);

  write_text_file(path, j.dump(1) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint: " + path.string() + ": " + e.what());
  }

  try {
    if (!j.is_object() || j.value("format", "") != "tradecast-checkpoint")
      throw FormatError("checkpoint: " + path.string() +
                        ": missing 'format: tradecast-checkpoint' marker");
    const int version = j.value("version", -1);
    if (version != Checkpoint::kFormatVersion)
      throw VersionError("checkpoint: " + path.string() + ": format version " +
                         std::to_string(version) + " unsupported (expected " +
                         std::to_string(Checkpoint::kFormatVersion) + ")");

    Checkpoint out;
    const auto& spec = j.at("spec");
    out.spec.architecture = architecture_from_string(spec.at("architecture").get<std::string>());
    out.spec.stack_depth = spec.at("stack_depth").get<std::size_t>();
    out.spec.units = spec.at("units").get<std::size_t>();
    out.spec.input_dim = spec.at("input_dim").get<std::size_t>();
    out.spec.forward_look = spec.at("forward_look").get<std::size_t>();

    out.params.spec = out.spec;
    const auto& tensors = j.at("tensors");
    std::size_t index = 0;
    for (const auto& layer : tensors.at("layers"))
      out.params.layers.push_back(
          detail::layer_from_json(layer, "layers[" + std::to_string(index++) + "]"));
    index = 0;
    for (const auto& layer : tensors.at("decoder"))
      out.params.decoder.push_back(
          detail::layer_from_json(layer, "decoder[" + std::to_string(index++) + "]"));
    out.params.dense_w = detail::tensor_from_json(tensors.at("dense_w"), "dense_w");
    out.params.dense_b = detail::tensor_from_json(tensors.at("dense_b"), "dense_b");
    out.params.check_consistent();

    for (const auto& [ticker, sj] : j.at("scalers").items()) {
      Scaler s;
      s.feature_min = sj.at("min").get<std::vector<double>>();
      s.feature_max = sj.at("max").get<std::vector<double>>();
      if (s.feature_min.size() != s.feature_max.size())
        throw FormatError("checkpoint: scaler '" + ticker + "' min/max length mismatch");
      out.scalers.emplace(ticker, std::move(s));
    }
    out.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("config"))
      out.config_echo = j.at("config").get<std::map<std::string, std::string>>();
    if (j.contains("loss_history")) {
      for (const auto& e : j.at("loss_history")) {
        EpochStats stats;
        stats.epoch = e.at("epoch").get<std::size_t>();
        stats.train_loss = e.at("train_loss").get<double>();
        stats.val_loss = e.at("val_loss").get<double>();
        out.loss_history.push_back(stats);
      }
    }
    return out;
  } catch (const VersionError&) {
    throw;
  } catch (const FormatError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: " + path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw FormatError("checkpoint: " + path.string() + ": inconsistent tensors: " + e.what());
  }
}

}  // namespace tradecast
