#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tradecast/errors.hpp"
#include "tradecast/matrix.hpp"
#include "tradecast/rng.hpp"

namespace tradecast {

// One LSTM cell's learnable tensors. W_* map the step input, U_* map the
// previous hidden state, b_* are biases; one of each per gate (forget, input,
// output) plus the cell candidate.
struct LstmLayerParams {
  Matrix w_f, w_i, w_o, w_c;  // units x input_dim
  Matrix u_f, u_i, u_o, u_c;  // units x units
  Matrix b_f, b_i, b_o, b_c;  // units x 1

  std::size_t units() const { return w_f.rows(); }
  std::size_t input_dim() const { return w_f.cols(); }

  std::array<Matrix*, 12> tensors() {
    return {&w_f, &w_i, &w_o, &w_c, &u_f, &u_i, &u_o, &u_c, &b_f, &b_i, &b_o, &b_c};
  }
  std::array<const Matrix*, 12> tensors() const {
    return {&w_f, &w_i, &w_o, &w_c, &u_f, &u_i, &u_o, &u_c, &b_f, &b_i, &b_o, &b_c};
  }

  static LstmLayerParams zeros(std::size_t units, std::size_t input_dim) {
    LstmLayerParams p;
    p.w_f = p.w_i = p.w_o = p.w_c = Matrix(units, input_dim);
    p.u_f = p.u_i = p.u_o = p.u_c = Matrix(units, units);
    p.b_f = p.b_i = p.b_o = p.b_c = Matrix(units, 1);
    return p;
  }

  void check_consistent() const {
    const std::size_t n = units();
    const std::size_t d = input_dim();
    for (const Matrix* w : {&w_f, &w_i, &w_o, &w_c}) {
      if (w->rows() != n || w->cols() != d)
        throw ShapeError("lstm layer: W tensor " + w->shape_str() + " inconsistent with (" +
                         std::to_string(n) + ", " + std::to_string(d) + ")");
    }
    for (const Matrix* u : {&u_f, &u_i, &u_o, &u_c}) {
      if (u->rows() != n || u->cols() != n)
        throw ShapeError("lstm layer: U tensor " + u->shape_str() + " must be " +
                         std::to_string(n) + "x" + std::to_string(n));
    }
    for (const Matrix* b : {&b_f, &b_i, &b_o, &b_c}) {
      if (b->rows() != n || b->cols() != 1)
        throw ShapeError("lstm layer: bias " + b->shape_str() + " must be " +
                         std::to_string(n) + "x1");
    }
  }
};

// Hidden and cell state; zero at the start of every sequence.
struct LstmState {
  Matrix h;  // units x 1
  Matrix c;  // units x 1

  static LstmState zero(std::size_t units) { return {Matrix(units, 1), Matrix(units, 1)}; }
};

enum class Architecture { StackedLstm, EncoderDecoder };

inline std::string to_string(Architecture a) {
  return a == Architecture::StackedLstm ? "stacked_lstm" : "encoder_decoder";
}

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "stacked_lstm") return Architecture::StackedLstm;
  if (s == "encoder_decoder") return Architecture::EncoderDecoder;
  throw ArgumentError("unknown architecture: '" + s + "'");
}

struct NetworkSpec {
  std::size_t stack_depth = 2;
  std::size_t units = 20;
  std::size_t input_dim = 1;
  std::size_t forward_look = 1;
  Architecture architecture = Architecture::StackedLstm;

  void validate() const {
    if (stack_depth < 1) throw ArgumentError("network spec: stack_depth must be >= 1");
    if (units < 1) throw ArgumentError("network spec: units must be >= 1");
    if (input_dim < 1) throw ArgumentError("network spec: input_dim must be >= 1");
    if (forward_look < 1) throw ArgumentError("network spec: forward_look must be >= 1");
  }

  bool operator==(const NetworkSpec&) const = default;
};

// Everything one timestep of one cell saw and produced; kept so the backward
// pass can replay the recurrence in reverse.
struct GateRecord {
  Matrix x;       // step input
  Matrix f, i, o; // gate activations, each in (0,1)
  Matrix g;       // cell candidate, tanh-activated, in (-1,1)
  Matrix c, h;    // post-step states
  Matrix c_prev, h_prev;
};

struct ForwardCache {
  std::vector<std::vector<GateRecord>> layer_steps;  // [layer][timestep]
  std::vector<GateRecord> decoder_steps;             // encoder-decoder only
};

// All learnable tensors of a network. For StackedLstm: `layers` is the stack
// and the dense head maps the final top hidden state to forward_look outputs.
// For EncoderDecoder: `layers` is the encoder stack, `decoder` holds one cell
// fed scalar price inputs, and the dense head maps each decoder hidden state
// to a single output.
struct NetworkParams {
  NetworkSpec spec;
  std::vector<LstmLayerParams> layers;
  std::vector<LstmLayerParams> decoder;
  Matrix dense_w;
  Matrix dense_b;

  // Fixed tensor order: per stack layer W_f,W_i,W_o,W_c,U_f,U_i,U_o,U_c,
  // b_f,b_i,b_o,b_c; then decoder layers likewise; then dense_w, dense_b.
  // Checkpoints, the optimizer and the finite-difference oracle all rely on
  // this ordering.
  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    for (auto& layer : layers)
      for (Matrix* t : layer.tensors()) out.push_back(t);
    for (auto& layer : decoder)
      for (Matrix* t : layer.tensors()) out.push_back(t);
    out.push_back(&dense_w);
    out.push_back(&dense_b);
    return out;
  }
  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    for (const auto& layer : layers)
      for (const Matrix* t : layer.tensors()) out.push_back(t);
    for (const auto& layer : decoder)
      for (const Matrix* t : layer.tensors()) out.push_back(t);
    out.push_back(&dense_w);
    out.push_back(&dense_b);
    return out;
  }

  void check_consistent() const {
    spec.validate();
    if (layers.size() != spec.stack_depth)
      throw ShapeError("network: expected " + std::to_string(spec.stack_depth) +
                       " stack layers, have " + std::to_string(layers.size()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].check_consistent();
      const std::size_t want_in = l == 0 ? spec.input_dim : layers[l - 1].units();
      if (layers[l].input_dim() != want_in)
        throw ShapeError("network: layer " + std::to_string(l) + " input_dim " +
                         std::to_string(layers[l].input_dim()) + " != " +
                         std::to_string(want_in));
      if (layers[l].units() != spec.units)
        throw ShapeError("network: layer " + std::to_string(l) + " units " +
                         std::to_string(layers[l].units()) + " != " +
                         std::to_string(spec.units));
    }
    if (spec.architecture == Architecture::EncoderDecoder) {
      if (decoder.size() != 1)
        throw ShapeError("network: encoder-decoder requires exactly one decoder layer");
      decoder[0].check_consistent();
      if (decoder[0].input_dim() != 1)
        throw ShapeError("network: decoder input_dim must be 1 (price feedback)");
      if (decoder[0].units() != spec.units)
        throw ShapeError("network: decoder units != spec units");
      if (dense_w.rows() != 1 || dense_w.cols() != spec.units || dense_b.rows() != 1 ||
          dense_b.cols() != 1)
        throw ShapeError("network: encoder-decoder dense head must be 1x" +
                         std::to_string(spec.units) + " with 1x1 bias");
    } else {
      if (!decoder.empty())
        throw ShapeError("network: stacked architecture must not carry decoder layers");
      if (dense_w.rows() != spec.forward_look || dense_w.cols() != spec.units ||
          dense_b.rows() != spec.forward_look || dense_b.cols() != 1)
        throw ShapeError("network: dense head must be " + std::to_string(spec.forward_look) +
                         "x" + std::to_string(spec.units));
    }
  }
};

// Gradient tensors, one per parameter tensor and in the same fixed order.
struct Gradients {
  std::vector<LstmLayerParams> layers;
  std::vector<LstmLayerParams> decoder;
  Matrix dense_w;
  Matrix dense_b;

  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    for (auto& layer : layers)
      for (Matrix* t : layer.tensors()) out.push_back(t);
    for (auto& layer : decoder)
      for (Matrix* t : layer.tensors()) out.push_back(t);
    out.push_back(&dense_w);
    out.push_back(&dense_b);
    return out;
  }
  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    for (const auto& layer : layers)
      for (const Matrix* t : layer.tensors()) out.push_back(t);
    for (const auto& layer : decoder)
      for (const Matrix* t : layer.tensors()) out.push_back(t);
    out.push_back(&dense_w);
    out.push_back(&dense_b);
    return out;
  }

  static Gradients zeros_like(const NetworkParams& p) {
    Gradients g;
    for (const auto& layer : p.layers)
      g.layers.push_back(LstmLayerParams::zeros(layer.units(), layer.input_dim()));
    for (const auto& layer : p.decoder)
      g.decoder.push_back(LstmLayerParams::zeros(layer.units(), layer.input_dim()));
    g.dense_w = Matrix(p.dense_w.rows(), p.dense_w.cols());
    g.dense_b = Matrix(p.dense_b.rows(), p.dense_b.cols());
    return g;
  }
};

inline void accumulate(Gradients& into, const Gradients& from) {
  auto a = into.tensors();
  auto b = from.tensors();
  if (a.size() != b.size()) throw ShapeError("gradient accumulate: tensor count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) *a[i] += *b[i];
}

inline void scale(Gradients& g, double s) {
  for (Matrix* t : g.tensors()) *t *= s;
}

inline double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const Matrix* t : g.tensors()) s += squared_norm(*t);
  return std::sqrt(s);
}

// Uniform initialization in [-1/sqrt(units), +1/sqrt(units)); tensors filled
// in the fixed parameter order so a seed pins the whole network.
inline NetworkParams init_params(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  NetworkParams p;
  p.spec = spec;
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.units));
  auto fill_layer = [&](std::size_t input_dim) {
    LstmLayerParams layer = LstmLayerParams::zeros(spec.units, input_dim);
    for (Matrix* t : layer.tensors())
      *t = seeded_uniform(rng, t->rows(), t->cols(), -bound, bound);
    return layer;
  };
  for (std::size_t l = 0; l < spec.stack_depth; ++l)
    p.layers.push_back(fill_layer(l == 0 ? spec.input_dim : spec.units));
  if (spec.architecture == Architecture::EncoderDecoder) {
    p.decoder.push_back(fill_layer(1));
    p.dense_w = seeded_uniform(rng, 1, spec.units, -bound, bound);
    p.dense_b = seeded_uniform(rng, 1, 1, -bound, bound);
  } else {
    p.dense_w = seeded_uniform(rng, spec.forward_look, spec.units, -bound, bound);
    p.dense_b = seeded_uniform(rng, spec.forward_look, 1, -bound, bound);
  }
  p.check_consistent();
  return p;
}

// One LSTM step:
//   f = sigmoid(W_f x + U_f h_prev + b_f)      (input and output gates alike)
//   g = tanh(W_c x + U_c h_prev + b_c)
//   c = f .* c_prev + i .* g
//   h = o .* tanh(c)
inline std::pair<LstmState, GateRecord> lstm_cell_forward(const Matrix& x,
                                                          const LstmState& prev,
                                                          const LstmLayerParams& p) {
  const std::size_t units = p.units();
  if (x.rows() != p.input_dim() || x.cols() != 1)
    throw ShapeError("lstm cell: input " + x.shape_str() + " does not match input_dim " +
                     std::to_string(p.input_dim()));
  if (prev.h.rows() != units || prev.h.cols() != 1 || prev.c.rows() != units ||
      prev.c.cols() != 1)
    throw ShapeError("lstm cell: state shape mismatch for " + std::to_string(units) +
                     " units");

  auto preact = [&](const Matrix& w, const Matrix& u, const Matrix& b) {
    Matrix z = b;
    matmul_acc(z, w, x);
    matmul_acc(z, u, prev.h);
    return z;
  };

  GateRecord rec;
  rec.x = x;
  rec.c_prev = prev.c;
  rec.h_prev = prev.h;
  rec.f = apply_activation(preact(p.w_f, p.u_f, p.b_f), Activation::Sigmoid);
  rec.i = apply_activation(preact(p.w_i, p.u_i, p.b_i), Activation::Sigmoid);
  rec.o = apply_activation(preact(p.w_o, p.u_o, p.b_o), Activation::Sigmoid);
  rec.g = apply_activation(preact(p.w_c, p.u_c, p.b_c), Activation::Tanh);

  Matrix c(units, 1);
  Matrix h(units, 1);
  for (std::size_t k = 0; k < units; ++k) {
    c[k] = rec.f[k] * prev.c[k] + rec.i[k] * rec.g[k];
    h[k] = rec.o[k] * std::tanh(c[k]);
  }
  rec.c = c;
  rec.h = h;
  return {LstmState{std::move(h), std::move(c)}, std::move(rec)};
}

namespace detail {

// Runs the stack left-to-right over the window rows; each layer consumes the
// full hidden sequence of the layer below.
inline void run_stack(const Matrix& window, const NetworkParams& p, ForwardCache& cache) {
  const std::size_t steps = window.rows();
  cache.layer_steps.assign(p.layers.size(), {});
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& records = cache.layer_steps[l];
    records.reserve(steps);
    LstmState state = LstmState::zero(p.layers[l].units());
    for (std::size_t t = 0; t < steps; ++t) {
      Matrix x = l == 0 ? window.row_as_column(t) : cache.layer_steps[l - 1][t].h;
      auto [next, rec] = lstm_cell_forward(x, state, p.layers[l]);
      state = std::move(next);
      records.push_back(std::move(rec));
    }
  }
}

// Reverse-time pass over one layer. dh_inject[t] carries the loss gradient
// entering h_t from outside the recurrence (dense head or the layer above);
// dc_final, when present, enters c at the last step (decoder state hand-over).
// Writes parameter gradients into `grad` and, when out_dx is non-null, the
// per-step input gradients for the layer below.
inline void bptt_layer(const LstmLayerParams& p, const std::vector<GateRecord>& steps,
                       const std::vector<Matrix>& dh_inject, const Matrix* dc_final,
                       LstmLayerParams& grad, std::vector<Matrix>* out_dx) {
  const std::size_t units = p.units();
  const std::size_t input_dim = p.input_dim();
  const std::size_t T = steps.size();
  if (out_dx) out_dx->assign(T, Matrix());

  Matrix dh_next(units, 1);
  Matrix dc_next(units, 1);
  Matrix dzf(units, 1), dzi(units, 1), dzo(units, 1), dzg(units, 1);

  for (std::size_t ti = T; ti-- > 0;) {
    const GateRecord& rec = steps[ti];
    Matrix dh = dh_inject[ti];
    dh += dh_next;
    Matrix dc = dc_next;
    if (dc_final && ti == T - 1) dc += *dc_final;

    for (std::size_t k = 0; k < units; ++k) {
      const double tc = std::tanh(rec.c[k]);
      const double do_k = dh[k] * tc;
      const double dc_k = dc[k] + dh[k] * rec.o[k] * (1.0 - tc * tc);
      const double df_k = dc_k * rec.c_prev[k];
      const double di_k = dc_k * rec.g[k];
      const double dg_k = dc_k * rec.i[k];
      dc_next[k] = dc_k * rec.f[k];
      dzf[k] = df_k * rec.f[k] * (1.0 - rec.f[k]);
      dzi[k] = di_k * rec.i[k] * (1.0 - rec.i[k]);
      dzo[k] = do_k * rec.o[k] * (1.0 - rec.o[k]);
      dzg[k] = dg_k * (1.0 - rec.g[k] * rec.g[k]);
    }

    outer_acc(grad.w_f, dzf, rec.x);
    outer_acc(grad.w_i, dzi, rec.x);
    outer_acc(grad.w_o, dzo, rec.x);
    outer_acc(grad.w_c, dzg, rec.x);
    outer_acc(grad.u_f, dzf, rec.h_prev);
    outer_acc(grad.u_i, dzi, rec.h_prev);
    outer_acc(grad.u_o, dzo, rec.h_prev);
    outer_acc(grad.u_c, dzg, rec.h_prev);
    grad.b_f += dzf;
    grad.b_i += dzi;
    grad.b_o += dzo;
    grad.b_c += dzg;

    if (out_dx) {
      Matrix dx(input_dim, 1);
      matmul_transposed_acc(dx, p.w_f, dzf);
      matmul_transposed_acc(dx, p.w_i, dzi);
      matmul_transposed_acc(dx, p.w_o, dzo);
      matmul_transposed_acc(dx, p.w_c, dzg);
      (*out_dx)[ti] = std::move(dx);
    }

    dh_next = Matrix(units, 1);
    matmul_transposed_acc(dh_next, p.u_f, dzf);
    matmul_transposed_acc(dh_next, p.u_i, dzi);
    matmul_transposed_acc(dh_next, p.u_o, dzo);
    matmul_transposed_acc(dh_next, p.u_c, dzg);
  }
}

// BPTT across the whole stack. dh_top_final / dc_top_final enter the top
// layer's last step; lower layers receive the input gradients of the layer
// above at every step.
inline void bptt_stack(const NetworkParams& p,
                       const std::vector<std::vector<GateRecord>>& layer_steps,
                       const Matrix& dh_top_final, const Matrix& dc_top_final,
                       std::vector<LstmLayerParams>& layer_grads) {
  const std::size_t depth = p.layers.size();
  const std::size_t T = layer_steps.front().size();
  const std::size_t units = p.layers.back().units();

  std::vector<Matrix> dh_inject(T, Matrix(units, 1));
  dh_inject[T - 1] = dh_top_final;

  for (std::size_t li = depth; li-- > 0;) {
    std::vector<Matrix> dx;
    const Matrix* dc_final = li == depth - 1 ? &dc_top_final : nullptr;
    bptt_layer(p.layers[li], layer_steps[li], dh_inject, dc_final, layer_grads[li],
               li > 0 ? &dx : nullptr);
    if (li > 0) dh_inject = std::move(dx);
  }
}

}  // namespace detail

struct WindowForward {
  Matrix prediction;  // forward_look x 1
  ForwardCache cache;
};

// Many-to-one pass: run the stack over the window, then feed the final
// top-layer hidden state through the affine head.
inline WindowForward forward_window(const Matrix& window, const NetworkParams& p) {
  p.check_consistent();
  if (p.spec.architecture != Architecture::StackedLstm)
    throw ArgumentError("forward_window: requires a stacked_lstm network");
  if (window.rows() == 0)
    throw ShapeError("forward_window: empty window");
  if (window.cols() != p.spec.input_dim)
    throw ShapeError("forward_window: window " + window.shape_str() +
                     " does not match input_dim " + std::to_string(p.spec.input_dim));

  WindowForward out;
  detail::run_stack(window, p, out.cache);
  const Matrix& h_final = out.cache.layer_steps.back().back().h;
  out.prediction = p.dense_b;
  matmul_acc(out.prediction, p.dense_w, h_final);
  return out;
}

// Gradients of a scalar loss with respect to every parameter, given the loss
// gradient at the prediction. Accumulates across timesteps (BPTT).
inline Gradients backward_window(const ForwardCache& cache, const NetworkParams& p,
                                 const Matrix& grad_prediction) {
  p.check_consistent();
  if (p.spec.architecture != Architecture::StackedLstm || !cache.decoder_steps.empty())
    throw StateError("backward_window: cache/params are not a stacked_lstm pair");
  if (cache.layer_steps.size() != p.layers.size())
    throw StateError("backward_window: cache has " + std::to_string(cache.layer_steps.size()) +
                     " layers, params have " + std::to_string(p.layers.size()));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (cache.layer_steps[l].empty())
      throw StateError("backward_window: cache layer " + std::to_string(l) + " is empty");
    if (cache.layer_steps[l].front().h.rows() != p.layers[l].units())
      throw StateError("backward_window: cache units do not match params");
  }
  if (grad_prediction.rows() != p.dense_b.rows() || grad_prediction.cols() != 1)
    throw ShapeError("backward_window: grad_prediction " + grad_prediction.shape_str() +
                     " does not match head output " + p.dense_b.shape_str());

  Gradients g = Gradients::zeros_like(p);
  const Matrix& h_final = cache.layer_steps.back().back().h;

  outer_acc(g.dense_w, grad_prediction, h_final);
  g.dense_b += grad_prediction;

  Matrix dh_top(p.spec.units, 1);
  matmul_transposed_acc(dh_top, p.dense_w, grad_prediction);
  detail::bptt_stack(p, cache.layer_steps, dh_top, Matrix(p.spec.units, 1), g.layers);
  return g;
}

enum class DecoderMode { TrainTeacherForced, InferSelfFeeding };

// Encoder-decoder pass. The encoder stack consumes the history window and
// hands its final (h, c) to the decoder. The decoder's first input is the
// last observed price in the window; afterwards it consumes the teacher value
// for the previous step (train mode) or its own previous head output (infer
// mode), emitting one price per step.
inline WindowForward encdec_forward(const Matrix& history, const Matrix& teacher,
                                    const NetworkParams& p, DecoderMode mode) {
  p.check_consistent();
  if (p.spec.architecture != Architecture::EncoderDecoder)
    throw ArgumentError("encdec_forward: requires an encoder_decoder network");
  if (history.rows() == 0)
    throw ShapeError("encdec_forward: empty history window");
  if (history.cols() != p.spec.input_dim)
    throw ShapeError("encdec_forward: history " + history.shape_str() +
                     " does not match input_dim " + std::to_string(p.spec.input_dim));
  const std::size_t fl = p.spec.forward_look;
  if (mode == DecoderMode::TrainTeacherForced &&
      (teacher.rows() != fl || teacher.cols() != 1))
    throw ArgumentError("encdec_forward: teacher sequence of length " + std::to_string(fl) +
                        " required in teacher-forced mode");

  WindowForward out;
  detail::run_stack(history, p, out.cache);
  const GateRecord& top_final = out.cache.layer_steps.back().back();
  LstmState state{top_final.h, top_final.c};

  const LstmLayerParams& dec = p.decoder.front();
  out.prediction = Matrix(fl, 1);
  out.cache.decoder_steps.reserve(fl);
  double feedback = history(history.rows() - 1, 0);
  for (std::size_t k = 0; k < fl; ++k) {
    Matrix x(1, 1);
    x[0] = feedback;
    auto [next, rec] = lstm_cell_forward(x, state, dec);
    state = std::move(next);
    out.cache.decoder_steps.push_back(std::move(rec));
    double y = p.dense_b[0];
    for (std::size_t u = 0; u < p.spec.units; ++u) y += p.dense_w(0, u) * state.h[u];
    out.prediction[k] = y;
    feedback = mode == DecoderMode::TrainTeacherForced && k + 1 < fl ? teacher[k] : y;
  }
  return out;
}

// BPTT over the teacher-forced encoder-decoder unroll. Decoder inputs other
// than the hand-over state are constants under teacher forcing, so gradient
// flows through the decoder recurrence into the encoder's final state only.
inline Gradients encdec_backward(const ForwardCache& cache, const NetworkParams& p,
                                 const Matrix& grad_prediction) {
  p.check_consistent();
  if (p.spec.architecture != Architecture::EncoderDecoder)
    throw StateError("encdec_backward: params are not an encoder_decoder network");
  if (cache.decoder_steps.size() != p.spec.forward_look ||
      cache.layer_steps.size() != p.layers.size() || cache.layer_steps.front().empty())
    throw StateError("encdec_backward: cache does not match params");
  if (grad_prediction.rows() != p.spec.forward_look || grad_prediction.cols() != 1)
    throw ShapeError("encdec_backward: grad_prediction " + grad_prediction.shape_str() +
                     " must be " + std::to_string(p.spec.forward_look) + "x1");

  Gradients g = Gradients::zeros_like(p);
  const LstmLayerParams& dec = p.decoder.front();
  LstmLayerParams& dec_grad = g.decoder.front();
  const std::size_t units = p.spec.units;

  Matrix dh_carry(units, 1);
  Matrix dc_carry(units, 1);
  Matrix dzf(units, 1), dzi(units, 1), dzo(units, 1), dzg(units, 1);

  for (std::size_t k = p.spec.forward_look; k-- > 0;) {
    const GateRecord& rec = cache.decoder_steps[k];
    const double dout = grad_prediction[k];

    // Head gradient at this step; dense_w is 1 x units.
    for (std::size_t u = 0; u < units; ++u) g.dense_w(0, u) += dout * rec.h[u];
    g.dense_b[0] += dout;

    Matrix dh = dh_carry;
    for (std::size_t u = 0; u < units; ++u) dh[u] += p.dense_w(0, u) * dout;
    const Matrix& dc_in = dc_carry;

    for (std::size_t u = 0; u < units; ++u) {
      const double tc = std::tanh(rec.c[u]);
      const double do_u = dh[u] * tc;
      const double dc_u = dc_in[u] + dh[u] * rec.o[u] * (1.0 - tc * tc);
      const double df_u = dc_u * rec.c_prev[u];
      const double di_u = dc_u * rec.g[u];
      const double dg_u = dc_u * rec.i[u];
      dc_carry[u] = dc_u * rec.f[u];
      dzf[u] = df_u * rec.f[u] * (1.0 - rec.f[u]);
      dzi[u] = di_u * rec.i[u] * (1.0 - rec.i[u]);
      dzo[u] = do_u * rec.o[u] * (1.0 - rec.o[u]);
      dzg[u] = dg_u * (1.0 - rec.g[u] * rec.g[u]);
    }

    outer_acc(dec_grad.w_f, dzf, rec.x);
    outer_acc(dec_grad.w_i, dzi, rec.x);
    outer_acc(dec_grad.w_o, dzo, rec.x);
    outer_acc(dec_grad.w_c, dzg, rec.x);
    outer_acc(dec_grad.u_f, dzf, rec.h_prev);
    outer_acc(dec_grad.u_i, dzi, rec.h_prev);
    outer_acc(dec_grad.u_o, dzo, rec.h_prev);
    outer_acc(dec_grad.u_c, dzg, rec.h_prev);
    dec_grad.b_f += dzf;
    dec_grad.b_i += dzi;
    dec_grad.b_o += dzo;
    dec_grad.b_c += dzg;

    dh_carry = Matrix(units, 1);
    matmul_transposed_acc(dh_carry, dec.u_f, dzf);
    matmul_transposed_acc(dh_carry, dec.u_i, dzi);
    matmul_transposed_acc(dh_carry, dec.u_o, dzo);
    matmul_transposed_acc(dh_carry, dec.u_c, dzg);
  }

  // Hand-over: the decoder's initial (h, c) is the encoder top layer's final
  // state, so the carries flow into the encoder BPTT.
  detail::bptt_stack(p, cache.layer_steps, dh_carry, dc_carry, g.layers);
  return g;
}

// Single emission for either architecture: the stacked head output, or the
// self-feeding decoder unroll. Inference entry point for the rollout code.
inline Matrix predict_window(const NetworkParams& p, const Matrix& window) {
  if (p.spec.architecture == Architecture::EncoderDecoder)
    return encdec_forward(window, Matrix(), p, DecoderMode::InferSelfFeeding).prediction;
  return forward_window(window, p).prediction;
}

}  // namespace tradecast
