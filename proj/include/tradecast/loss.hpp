#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tradecast/errors.hpp"
#include "tradecast/matrix.hpp"

namespace tradecast {

// Per-offset loss weights for multi-day targets; strictly positive and
// nondecreasing in the days-ahead index.
struct WeightVector {
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }

  static WeightVector ones(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

// w[j] = 1 + j/200, j = 0 for the nearest predicted day. Days further ahead
// carry more weight, matching the observed growth of prediction error with
// distance from the window.
inline WeightVector make_weights(std::size_t forward_look) {
  if (forward_look < 1) throw ArgumentError("make_weights: forward_look must be >= 1");
  WeightVector out;
  out.w.resize(forward_look);
  for (std::size_t j = 0; j < forward_look; ++j)
    out.w[j] = 1.0 + static_cast<double>(j) / 200.0;
  return out;
}

struct LossResult {
  double loss = 0.0;
  std::vector<Matrix> grads;  // d loss / d prediction, one per prediction
};

// loss = (1/m) sum_i || w .* (pred_i - truth_i) ||^2
// grad_i[j] = (2/m) * w[j]^2 * (pred_i[j] - truth_i[j])
inline LossResult weighted_mse_loss(const std::vector<Matrix>& pred,
                                    const std::vector<Matrix>& truth,
                                    const WeightVector& weights) {
  if (pred.size() != truth.size())
    throw ShapeError("weighted_mse_loss: " + std::to_string(pred.size()) +
                     " predictions vs " + std::to_string(truth.size()) + " truths");
  if (pred.empty()) throw ShapeError("weighted_mse_loss: empty batch");

  const std::size_t m = pred.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  LossResult out;
  out.grads.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!pred[i].same_shape(truth[i]) || pred[i].cols() != 1)
      throw ShapeError("weighted_mse_loss: prediction " + pred[i].shape_str() +
                       " vs truth " + truth[i].shape_str());
    if (pred[i].rows() != weights.size())
      throw ShapeError("weighted_mse_loss: weight length " +
                       std::to_string(weights.size()) + " vs prediction length " +
                       std::to_string(pred[i].rows()));
    Matrix grad(pred[i].rows(), 1);
    for (std::size_t j = 0; j < pred[i].rows(); ++j) {
      const double r = weights[j] * (pred[i][j] - truth[i][j]);
      out.loss += inv_m * (r * r);
      grad[j] = 2.0 * inv_m * weights[j] * weights[j] * (pred[i][j] - truth[i][j]);
    }
    out.grads.push_back(std::move(grad));
  }
  return out;
}

// loss = (1/m) sum_i || pred_i - truth_i ||^2. Identical to the weighted form
// with unit weights, including summation order.
inline LossResult mse_loss(const std::vector<Matrix>& pred,
                           const std::vector<Matrix>& truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw ShapeError("mse_loss: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " truths");
  return weighted_mse_loss(pred, truth, WeightVector::ones(pred.front().rows()));
}

}  // namespace tradecast
