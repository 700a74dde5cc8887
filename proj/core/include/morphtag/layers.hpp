#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "morphtag/graph.hpp"
#include "morphtag/ops.hpp"
#include "morphtag/rng.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {

// Trainable parameters and non-trainable state (batch-norm running
// statistics) of a module, in a stable order.
template <typename T>
struct ParameterRefs {
  std::vector<Parameter<T>*> trainable;
  std::vector<Parameter<T>*> buffers;

  std::vector<Parameter<T>*> all() const {
    std::vector<Parameter<T>*> out(trainable);
    out.insert(out.end(), buffers.begin(), buffers.end());
    return out;
  }
};

template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (auto& v : w.data()) v = T(rng.uniform(-limit, limit));
}

template <typename T>
Var<T> dense_forward(const Var<T>& x, const Var<T>& weights, const Var<T>& bias, Activation act) {
  return ops::activate(ops::add_bias(ops::matmul_nt(x, weights), bias), act);
}

template <typename T>
struct Dense {
  Parameter<T> weight;  // [out x in]
  Parameter<T> bias;    // [out]
  Activation activation = Activation::none;

  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng)
      : weight(name + ".weight", Tensor<T>::matrix(out, in)),
        bias(name + ".bias", Tensor<T>(Shape{out})),
        activation(act) {
    glorot_uniform(weight.value, in, out, rng);
  }

  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }

  Var<T> forward(Graph<T>& g, const Var<T>& x) {
    return dense_forward(x, g.param(weight), g.param(bias), activation);
  }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&weight);
    refs.trainable.push_back(&bias);
  }
};

// Single-direction LSTM parameters. The four gates are stored as row blocks
// of fused matrices in the order input, forget, cell candidate, output.
template <typename T>
struct LstmParams {
  Parameter<T> input_weights;      // [4H x in]
  Parameter<T> recurrent_weights;  // [4H x H]
  Parameter<T> bias;               // [4H]

  LstmParams() = default;
  LstmParams(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng)
      : input_weights(name + ".input_weights", Tensor<T>::matrix(4 * hidden, input)),
        recurrent_weights(name + ".recurrent_weights", Tensor<T>::matrix(4 * hidden, hidden)),
        bias(name + ".bias", Tensor<T>(Shape{4 * hidden})) {
    for (std::size_t gate = 0; gate < 4; ++gate) {
      Tensor<T> wx = Tensor<T>::matrix(hidden, input), wh = Tensor<T>::matrix(hidden, hidden);
      glorot_uniform(wx, input, hidden, rng);
      glorot_uniform(wh, hidden, hidden, rng);
      input_weights.value.mat().middleRows(Eigen::Index(gate * hidden), Eigen::Index(hidden)) = wx.mat();
      recurrent_weights.value.mat().middleRows(Eigen::Index(gate * hidden), Eigen::Index(hidden)) = wh.mat();
    }
    for (std::size_t j = hidden; j < 2 * hidden; ++j) bias.value[j] = T(1);
  }

  std::size_t hidden() const { return recurrent_weights.value.cols(); }
  std::size_t input() const { return input_weights.value.cols(); }

  void validate() const {
    const std::size_t h = hidden();
    if (recurrent_weights.value.rows() != 4 * h || input_weights.value.rows() != 4 * h ||
        bias.value.size() != 4 * h) {
      throw DimensionError("LSTM parameters need 4 gates of hidden size " + std::to_string(h));
    }
  }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&input_weights);
    refs.trainable.push_back(&recurrent_weights);
    refs.trainable.push_back(&bias);
  }
};

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

namespace ops {

// Fused LSTM cell. gates_x = x W_x^T + b is precomputed, [B x 4H]. Returns
// [B x 2H] holding h' in the first H columns and c' in the last H.
template <typename T>
Var<T> lstm_cell(const Var<T>& gates_x, const Var<T>& h, const Var<T>& c, const Var<T>& w_h) {
  const std::size_t batch = gates_x.rows(), hidden = h.cols();
  detail::require(gates_x.cols() == 4 * hidden && h.rows() == batch && c.shape() == h.shape() &&
                      w_h.rows() == 4 * hidden && w_h.cols() == hidden,
                  "lstm_cell: gates " + detail::dims(gates_x) + ", h " + detail::dims(h) + ", c " +
                      detail::dims(c) + ", W_h " + detail::dims(w_h));
  Tensor<T> gates = Tensor<T>::matrix(batch, 4 * hidden);
  gates.mat() = gates_x.value().mat();
  gates.mat().noalias() += h.value().mat() * w_h.value().mat().transpose();
  Tensor<T> out = Tensor<T>::matrix(batch, 2 * hidden);
  Tensor<T> tanh_c = Tensor<T>::matrix(batch, hidden);
  const auto& cv = c.value();
  for (std::size_t b = 0; b < batch; ++b) {
    T* z = &gates.at(b, 0);
    for (std::size_t j = 0; j < hidden; ++j) {
      const T i = detail::sigmoid(z[j]);
      const T f = detail::sigmoid(z[hidden + j]);
      const T cand = std::tanh(z[2 * hidden + j]);
      const T o = detail::sigmoid(z[3 * hidden + j]);
      z[j] = i;
      z[hidden + j] = f;
      z[2 * hidden + j] = cand;
      z[3 * hidden + j] = o;
      const T c_new = f * cv.at(b, j) + i * cand;
      const T tc = std::tanh(c_new);
      tanh_c.at(b, j) = tc;
      out.at(b, j) = o * tc;
      out.at(b, hidden + j) = c_new;
    }
  }
  const std::size_t gi = gates_x.id(), hi = h.id(), ci = c.id(), wi = w_h.id();
  return gates_x.graph().record(
      std::move(out), detail::any_requires_grad({gates_x, h, c, w_h}),
      [gi, hi, ci, wi, hidden, gates = std::move(gates), tanh_c = std::move(tanh_c)](Graph<T>& g,
                                                                                     std::size_t self) {
        const auto& dout = g.grad(self);
        const auto& cv = g.value(ci);
        const std::size_t batch = dout.rows();
        Tensor<T> dz = Tensor<T>::matrix(batch, 4 * hidden);
        Tensor<T> dc_prev = Tensor<T>::matrix(batch, hidden);
        for (std::size_t b = 0; b < batch; ++b) {
          const T* a = &gates.at(b, 0);
          T* d = &dz.at(b, 0);
          for (std::size_t j = 0; j < hidden; ++j) {
            const T i = a[j], f = a[hidden + j], cand = a[2 * hidden + j], o = a[3 * hidden + j];
            const T tc = tanh_c.at(b, j);
            const T dh = dout.at(b, j);
            const T dc = dout.at(b, hidden + j) + dh * o * (T(1) - tc * tc);
            d[j] = dc * cand * i * (T(1) - i);
            d[hidden + j] = dc * cv.at(b, j) * f * (T(1) - f);
            d[2 * hidden + j] = dc * i * (T(1) - cand * cand);
            d[3 * hidden + j] = dh * tc * o * (T(1) - o);
            dc_prev.at(b, j) = dc * f;
          }
        }
        if (g.requires_grad(gi)) g.grad(gi).vec() += dz.vec();
        if (g.requires_grad(ci)) g.grad(ci).vec() += dc_prev.vec();
        if (g.requires_grad(hi)) g.grad(hi).mat().noalias() += dz.mat() * g.value(wi).mat();
        if (g.requires_grad(wi)) g.grad(wi).mat().noalias() += dz.mat().transpose() * g.value(hi).mat();
      },
      "lstm_cell");
}

}  // namespace ops

template <typename T>
LstmState<T> lstm_step(Graph<T>& g, const Var<T>& x, const LstmState<T>& state, LstmParams<T>& params) {
  params.validate();
  if (x.cols() != params.input()) {
    throw DimensionError("lstm_step: input width " + std::to_string(x.cols()) + " but parameters expect " +
                         std::to_string(params.input()));
  }
  const std::size_t hidden = params.hidden();
  const Var<T> gates_x = ops::add_bias(ops::matmul_nt(x, g.param(params.input_weights)), g.param(params.bias));
  const Var<T> hc = ops::lstm_cell(gates_x, state.h, state.c, g.param(params.recurrent_weights));
  return {ops::slice_cols(hc, 0, hidden), ops::slice_cols(hc, hidden, hidden)};
}

template <typename T>
struct SequenceStates {
  Var<T> fwd;     // [T*B x H], time-major rows (row = t*B + b)
  Var<T> bwd;     // [T*B x H]
  Var<T> concat;  // [T*B x 2H]
};

namespace detail {

// Runs one direction over a time-major input. `valid` (empty = all valid)
// marks real positions; at padded positions the previous state is carried
// unchanged, so a backward pass starts from zeros at each sequence's end.
template <typename T>
std::vector<Var<T>> run_direction(Graph<T>& g, const Var<T>& xs, std::size_t batch,
                                  const std::vector<std::uint8_t>& valid, LstmParams<T>& params,
                                  bool reverse) {
  params.validate();
  if (xs.cols() != params.input()) {
    throw DimensionError("lstm: input width " + std::to_string(xs.cols()) + " but parameters expect " +
                         std::to_string(params.input()));
  }
  const std::size_t steps = xs.rows() / batch, hidden = params.hidden();
  const Var<T> gates_all =
      ops::add_bias(ops::matmul_nt(xs, g.param(params.input_weights)), g.param(params.bias));
  const Var<T> w_h = g.param(params.recurrent_weights);
  Var<T> h = g.constant(Tensor<T>::matrix(batch, hidden));
  Var<T> c = g.constant(Tensor<T>::matrix(batch, hidden));
  std::vector<Var<T>> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const Var<T> hc = ops::lstm_cell(ops::slice_rows(gates_all, t * batch, batch), h, c, w_h);
    Var<T> h_new = ops::slice_cols(hc, 0, hidden);
    Var<T> c_new = ops::slice_cols(hc, hidden, hidden);
    if (!valid.empty()) {
      const std::vector<std::uint8_t> keep(valid.begin() + std::ptrdiff_t(t * batch),
                                           valid.begin() + std::ptrdiff_t((t + 1) * batch));
      if (std::find(keep.begin(), keep.end(), std::uint8_t{0}) != keep.end()) {
        h_new = ops::where_rows(keep, h_new, h);
        c_new = ops::where_rows(keep, c_new, c);
      }
    }
    outputs[t] = h_new;
    h = h_new;
    c = c_new;
  }
  return outputs;
}

}  // namespace detail

// Bidirectional LSTM with a separate input per direction, both [T*B x in]
// in time-major order.
template <typename T>
SequenceStates<T> bilstm_forward(Graph<T>& g, const Var<T>& xs_fwd, const Var<T>& xs_bwd, std::size_t batch,
                                 const std::vector<std::uint8_t>& valid, LstmParams<T>& fwd,
                                 LstmParams<T>& bwd) {
  if (batch == 0 || xs_fwd.rows() == 0 || xs_fwd.rows() % batch != 0) {
    throw DimensionError("bilstm: empty sequence or rows " + std::to_string(xs_fwd.rows()) +
                         " not divisible by batch " + std::to_string(batch));
  }
  if (xs_bwd.rows() != xs_fwd.rows()) throw DimensionError("bilstm: direction inputs differ in length");
  if (!valid.empty() && valid.size() != xs_fwd.rows()) throw DimensionError("bilstm: mask size mismatch");
  SequenceStates<T> out;
  out.fwd = ops::concat_rows(detail::run_direction(g, xs_fwd, batch, valid, fwd, false));
  out.bwd = ops::concat_rows(detail::run_direction(g, xs_bwd, batch, valid, bwd, true));
  out.concat = ops::concat_cols(std::vector<Var<T>>{out.fwd, out.bwd});
  return out;
}

// Bidirectional LSTM over `xs` [T*B x in] in time-major order. With B = 1
// this is the plain single-sequence BiLSTM.
template <typename T>
SequenceStates<T> bilstm_forward(Graph<T>& g, const Var<T>& xs, std::size_t batch,
                                 const std::vector<std::uint8_t>& valid, LstmParams<T>& fwd,
                                 LstmParams<T>& bwd) {
  return bilstm_forward(g, xs, xs, batch, valid, fwd, bwd);
}

template <typename T>
SequenceStates<T> bilstm_forward(Graph<T>& g, const Var<T>& xs, LstmParams<T>& fwd, LstmParams<T>& bwd) {
  return bilstm_forward(g, xs, 1, {}, fwd, bwd);
}

template <typename T>
struct BatchNormState {
  Parameter<T> gamma;
  Parameter<T> beta;
  Parameter<T> running_mean;
  Parameter<T> running_var;
  double momentum = 0.9;  // weight of the previous running value
  double epsilon = 1e-5;

  BatchNormState() = default;
  BatchNormState(const std::string& name, std::size_t features, double momentum_ = 0.9, double epsilon_ = 1e-5)
      : gamma(name + ".gamma", Tensor<T>(Shape{features})),
        beta(name + ".beta", Tensor<T>(Shape{features})),
        running_mean(name + ".running_mean", Tensor<T>(Shape{features})),
        running_var(name + ".running_var", Tensor<T>(Shape{features})),
        momentum(momentum_),
        epsilon(epsilon_) {
    if (!(epsilon > 0)) throw ConfigError("batch norm epsilon must be positive");
    gamma.value.fill(T(1));
    running_var.value.fill(T(1));
  }

  std::size_t features() const { return gamma.value.size(); }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&gamma);
    refs.trainable.push_back(&beta);
    refs.buffers.push_back(&running_mean);
    refs.buffers.push_back(&running_var);
  }
};

// Train mode normalises by batch statistics over the rows of x and, when
// update_running is set, folds them into the running estimates (unbiased
// variance). Eval mode uses the running estimates and mutates nothing.
template <typename T>
Var<T> batch_norm(Graph<T>& g, const Var<T>& x, BatchNormState<T>& state, Mode mode, bool update_running = true) {
  const std::size_t n = x.rows(), features = state.features();
  ops::detail::require(x.cols() == features,
                       "batch_norm: input " + ops::detail::dims(x) + " vs " + std::to_string(features) + " features");
  const Var<T> gamma = g.param(state.gamma), beta = g.param(state.beta);
  const auto xm = x.value().mat();
  Tensor<T> xhat = Tensor<T>::matrix(n, features);
  Tensor<T> inv_std(Shape{features});
  if (mode == Mode::train) {
    if (n < 2) throw DimensionError("batch_norm needs at least 2 rows in train mode, got " + std::to_string(n));
    const Eigen::Matrix<T, 1, Eigen::Dynamic> mu = xm.colwise().mean();
    RowMatrix<T> centered = xm.rowwise() - mu;
    const Eigen::Matrix<T, 1, Eigen::Dynamic> var = centered.array().square().colwise().sum() / T(n);
    for (std::size_t j = 0; j < features; ++j) inv_std[j] = T(1) / std::sqrt(var(Eigen::Index(j)) + T(state.epsilon));
    xhat.mat() = centered.array().rowwise() * inv_std.vec().transpose().array();
    if (update_running) {
      const T m = T(state.momentum);
      const T unbias = T(n) / T(n - 1);
      state.running_mean.value.vec() = m * state.running_mean.value.vec() + (T(1) - m) * mu.transpose();
      state.running_var.value.vec() = m * state.running_var.value.vec() + (T(1) - m) * unbias * var.transpose();
    }
  } else {
    for (std::size_t j = 0; j < features; ++j) {
      inv_std[j] = T(1) / std::sqrt(state.running_var.value[j] + T(state.epsilon));
    }
    xhat.mat() = (xm.rowwise() - state.running_mean.value.vec().transpose()).array().rowwise() *
                 inv_std.vec().transpose().array();
  }
  Tensor<T> y = Tensor<T>::matrix(n, features);
  y.mat() = (xhat.mat().array().rowwise() * gamma.value().vec().transpose().array()).rowwise() +
            beta.value().vec().transpose().array();
  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  const bool batch_stats = mode == Mode::train;
  return g.record(
      std::move(y), ops::detail::any_requires_grad({x, gamma, beta}),
      [xi, gi, bi, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<T>& gr,
                                                                                      std::size_t self) {
        const auto dy = gr.grad(self).mat();
        if (gr.requires_grad(gi)) gr.grad(gi).vec() += (dy.array() * xhat.mat().array()).colwise().sum().transpose().matrix();
        if (gr.requires_grad(bi)) gr.grad(bi).vec() += dy.colwise().sum().transpose();
        if (!gr.requires_grad(xi)) return;
        const auto gamma_v = gr.value(gi).vec();
        RowMatrix<T> dxhat = dy.array().rowwise() * gamma_v.transpose().array();
        auto dx = gr.grad(xi).mat();
        if (!batch_stats) {
          dx.array() += dxhat.array().rowwise() * inv_std.vec().transpose().array();
          return;
        }
        const T n = T(dxhat.rows());
        const Eigen::Matrix<T, 1, Eigen::Dynamic> sum_d = dxhat.colwise().sum();
        const Eigen::Matrix<T, 1, Eigen::Dynamic> sum_dx = (dxhat.array() * xhat.mat().array()).colwise().sum();
        RowMatrix<T> inner = (dxhat * n).rowwise() - sum_d;
        inner.array() -= xhat.mat().array().rowwise() * sum_dx.array();
        dx.array() += (inner.array().rowwise() * inv_std.vec().transpose().array()) / n;
      },
      "batch_norm");
}

}  // namespace morphtag
