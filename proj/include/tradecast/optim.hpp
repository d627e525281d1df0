#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/errors.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/matrix.hpp"

namespace tradecast {

// Adam moment accumulators plus hyperparameters. Defaults are the canonical
// ones: alpha 1e-3, beta1 0.9, beta2 0.999, epsilon 1e-8.
struct AdamState {
  Gradients m;  // first moments, parameter-shaped
  Gradients v;  // second moments, parameter-shaped
  std::uint64_t step = 0;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const NetworkParams& params, double alpha = 1e-3,
                        double beta1 = 0.9, double beta2 = 0.999,
                        double epsilon = 1e-8) {
    AdamState s;
    s.m = Gradients::zeros_like(params);
    s.v = Gradients::zeros_like(params);
    s.alpha = alpha;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
  }
};

// One bias-corrected Adam update, applied to params in place.
inline void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state) {
  auto thetas = params.tensors();
  const auto gs = grads.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  if (thetas.size() != gs.size() || thetas.size() != ms.size())
    throw ShapeError("adam_step: tensor count mismatch");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t t = 0; t < thetas.size(); ++t) {
    Matrix& theta = *thetas[t];
    const Matrix& g = *gs[t];
    Matrix& m = *ms[t];
    Matrix& v = *vs[t];
    if (!theta.same_shape(g) || !theta.same_shape(m) || !theta.same_shape(v))
      throw ShapeError("adam_step: tensor " + std::to_string(t) + " shape mismatch " +
                       theta.shape_str() + " vs " + g.shape_str());
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      theta[k] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

// Central-difference gradient of an arbitrary scalar function of a matrix.
// The verification oracle for hand-derived backward passes.
template <typename LossFn>
Matrix finite_diff_grad(LossFn&& loss, const Matrix& at, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("finite_diff_grad: eps must be positive");
  Matrix grad(at.rows(), at.cols());
  Matrix point = at;
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double saved = point[k];
    point[k] = saved + eps;
    const double up = loss(static_cast<const Matrix&>(point));
    point[k] = saved - eps;
    const double down = loss(static_cast<const Matrix&>(point));
    point[k] = saved;
    grad[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

// Central differences over every scalar parameter of a network.
template <typename LossFn>
Gradients finite_diff_grad_params(LossFn&& loss, const NetworkParams& params, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("finite_diff_grad: eps must be positive");
  NetworkParams point = params;
  Gradients grad = Gradients::zeros_like(params);
  auto tensors = point.tensors();
  auto grad_tensors = grad.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix& tensor = *tensors[t];
    Matrix& gt = *grad_tensors[t];
    for (std::size_t k = 0; k < tensor.size(); ++k) {
      const double saved = tensor[k];
      tensor[k] = saved + eps;
      const double up = loss(static_cast<const NetworkParams&>(point));
      tensor[k] = saved - eps;
      const double down = loss(static_cast<const NetworkParams&>(point));
      tensor[k] = saved;
      gt[k] = (up - down) / (2.0 * eps);
    }
  }
  return grad;
}

}  // namespace tradecast
