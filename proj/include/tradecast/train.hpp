#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/loss.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/optim.hpp"
#include "tradecast/rng.hpp"

namespace tradecast {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 500;
  std::size_t steps_per_epoch = 200;
  std::size_t validation_steps = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // <= 0 disables global-norm clipping
  std::uint64_t seed = 42;

  void validate() const {
    if (batch_size < 1 || epochs < 1 || steps_per_epoch < 1 || validation_steps < 1)
      throw ArgumentError("train config: all counts must be >= 1");
  }
};

enum class LossKind { Plain, Weighted };

inline std::string to_string(LossKind k) {
  return k == LossKind::Plain ? "plain" : "weighted";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "plain") return LossKind::Plain;
  if (s == "weighted") return LossKind::Weighted;
  throw ArgumentError("unknown loss kind: '" + s + "'");
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochStats> history;
};

namespace detail {

inline WindowForward forward_for_training(const NetworkParams& p, const Window& w) {
  if (p.spec.architecture == Architecture::EncoderDecoder)
    return encdec_forward(w.input, w.target, p, DecoderMode::TrainTeacherForced);
  return forward_window(w.input, p);
}

inline Gradients backward_for_training(const ForwardCache& cache, const NetworkParams& p,
                                       const Matrix& grad_prediction) {
  if (p.spec.architecture == Architecture::EncoderDecoder)
    return encdec_backward(cache, p, grad_prediction);
  return backward_window(cache, p, grad_prediction);
}

}  // namespace detail

// Minibatch Adam training. Batches are drawn with replacement from the seeded
// stream (steps_per_epoch * batch_size may exceed the dataset), gradients are
// reduced in batch order, and one Adam step runs per batch, so a seed pins the
// whole run. Validation batches come from the same stream after each epoch's
// training steps.
inline TrainResult train(NetworkParams params, const WindowedDataset& train_set,
                         const WindowedDataset& dev_set, const TrainConfig& cfg,
                         LossKind loss_kind) {
  cfg.validate();
  params.check_consistent();
  if (train_set.empty()) throw ArgumentError("train: training dataset is empty");
  if (dev_set.empty()) throw ArgumentError("train: validation dataset is empty");
  if (cfg.batch_size > train_set.size())
    throw ArgumentError("train: batch_size " + std::to_string(cfg.batch_size) +
                        " exceeds training set size " + std::to_string(train_set.size()));

  const WeightVector weights = loss_kind == LossKind::Weighted
                                   ? make_weights(params.spec.forward_look)
                                   : WeightVector::ones(params.spec.forward_look);

  AdamState adam =
      AdamState::init(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  Rng rng(cfg.seed);

  TrainResult out;
  out.history.reserve(cfg.epochs);

  std::vector<Matrix> preds(cfg.batch_size);
  std::vector<Matrix> truths(cfg.batch_size);
  std::vector<ForwardCache> caches(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step) {
      for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const Window& w = train_set[rng.next_index(train_set.size())];
        WindowForward fwd = detail::forward_for_training(params, w);
        preds[b] = std::move(fwd.prediction);
        caches[b] = std::move(fwd.cache);
        truths[b] = w.target;
      }
      const LossResult loss = weighted_mse_loss(preds, truths, weights);
      loss_sum += loss.loss;

      Gradients total = Gradients::zeros_like(params);
      for (std::size_t b = 0; b < cfg.batch_size; ++b)
        accumulate(total, detail::backward_for_training(caches[b], params, loss.grads[b]));
      if (cfg.clip_norm > 0.0) {
        const double norm = global_norm(total);
        if (norm > cfg.clip_norm) scale(total, cfg.clip_norm / norm);
      }
      adam_step(params, total, adam);
    }

    double val_sum = 0.0;
    for (std::size_t step = 0; step < cfg.validation_steps; ++step) {
      for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const Window& w = dev_set[rng.next_index(dev_set.size())];
        preds[b] = detail::forward_for_training(params, w).prediction;
        truths[b] = w.target;
      }
      val_sum += weighted_mse_loss(preds, truths, weights).loss;
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(cfg.steps_per_epoch);
    stats.val_loss = val_sum / static_cast<double>(cfg.validation_steps);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
      throw StateError("train: non-finite loss at epoch " + std::to_string(stats.epoch));
    out.history.push_back(stats);
  }

  out.params = std::move(params);
  return out;
}

}  // namespace tradecast
