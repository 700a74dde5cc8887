#pragma once

// Differentiable primitives over Graph nodes. Every op checks shapes,
// computes its value eagerly and records a backward closure when any input
// requires a gradient. Matrices are [rows x cols] views of the node tensors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "morphtag/graph.hpp"
#include "morphtag/rng.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {

enum class Activation { none, relu, tanh, sigmoid };

Activation parse_activation(const std::string& name);
std::string activation_name(Activation act);

namespace ops {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

template <typename T>
std::string dims(const Var<T>& v) {
  return shape_string(v.shape());
}

template <typename T>
bool any_requires_grad(std::initializer_list<Var<T>> vars) {
  return std::any_of(vars.begin(), vars.end(), [](const Var<T>& v) { return v.requires_grad(); });
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

}  // namespace detail

// y = x W^T, x [B x in], W [out x in].
template <typename T>
Var<T> matmul_nt(const Var<T>& x, const Var<T>& w) {
  detail::require(w.value().rank() == 2 && x.cols() == w.cols(),
                  "matmul: input " + detail::dims(x) + " vs weights " + detail::dims(w));
  Tensor<T> y = Tensor<T>::matrix(x.rows(), w.rows());
  y.mat().noalias() = x.value().mat() * w.value().mat().transpose();
  const std::size_t xi = x.id(), wi = w.id();
  const bool req = detail::any_requires_grad({x, w});
  return x.graph().record(
      std::move(y), req,
      [xi, wi](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).mat();
        if (g.requires_grad(xi)) g.grad(xi).mat().noalias() += dy * g.value(wi).mat();
        if (g.requires_grad(wi)) g.grad(wi).mat().noalias() += dy.transpose() * g.value(xi).mat();
      },
      "matmul");
}

// y = x + b broadcast over rows, b has x.cols() elements.
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  detail::require(b.value().size() == x.cols(), "add_bias: " + detail::dims(x) + " vs " + detail::dims(b));
  Tensor<T> y(Shape{x.rows(), x.cols()}, x.value().storage());
  y.mat().rowwise() += b.value().vec().transpose();
  const std::size_t xi = x.id(), bi = b.id();
  return x.graph().record(
      std::move(y), detail::any_requires_grad({x, b}),
      [xi, bi](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).mat();
        if (g.requires_grad(xi)) g.grad(xi).vec() += g.grad(self).vec();
        if (g.requires_grad(bi)) g.grad(bi).vec() += dy.colwise().sum().transpose();
      },
      "add_bias");
}

template <typename T>
Var<T> activate(const Var<T>& x, Activation act) {
  if (act == Activation::none) return x;
  Tensor<T> y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T z = xv[i];
    switch (act) {
      case Activation::relu: y[i] = z > T(0) ? z : T(0); break;
      case Activation::tanh: y[i] = std::tanh(z); break;
      case Activation::sigmoid: y[i] = detail::sigmoid(z); break;
      case Activation::none: break;
    }
  }
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi, act](Graph<T>& g, std::size_t self) {
        const auto& dy = g.grad(self);
        const auto& yv = g.value(self);
        auto& dx = g.grad(xi);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const T yi = yv[i];
          switch (act) {
            case Activation::relu: dx[i] += yi > T(0) ? dy[i] : T(0); break;
            case Activation::tanh: dx[i] += dy[i] * (T(1) - yi * yi); break;
            case Activation::sigmoid: dx[i] += dy[i] * yi * (T(1) - yi); break;
            case Activation::none: break;
          }
        }
      },
      "activate");
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return activate(x, Activation::relu);
}
template <typename T>
Var<T> tanh(const Var<T>& x) {
  return activate(x, Activation::tanh);
}
template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return activate(x, Activation::sigmoid);
}

// Elementwise a + alpha * b.
template <typename T>
Var<T> axpy(const Var<T>& a, const Var<T>& b, T alpha) {
  detail::require(a.shape() == b.shape(), "add: " + detail::dims(a) + " vs " + detail::dims(b));
  Tensor<T> y(a.value());
  y.vec() += alpha * b.value().vec();
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record(
      std::move(y), detail::any_requires_grad({a, b}),
      [ai, bi, alpha](Graph<T>& g, std::size_t self) {
        if (g.requires_grad(ai)) g.grad(ai).vec() += g.grad(self).vec();
        if (g.requires_grad(bi)) g.grad(bi).vec() += alpha * g.grad(self).vec();
      },
      "add");
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return axpy(a, b, T(1));
}
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return axpy(a, b, T(-1));
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require(a.shape() == b.shape(), "mul: " + detail::dims(a) + " vs " + detail::dims(b));
  Tensor<T> y(a.shape());
  y.vec() = a.value().vec().cwiseProduct(b.value().vec());
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record(
      std::move(y), detail::any_requires_grad({a, b}),
      [ai, bi](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).vec();
        if (g.requires_grad(ai)) g.grad(ai).vec() += dy.cwiseProduct(g.value(bi).vec());
        if (g.requires_grad(bi)) g.grad(bi).vec() += dy.cwiseProduct(g.value(ai).vec());
      },
      "mul");
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> y(x.value());
  y.vec() *= factor;
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi, factor](Graph<T>& g, std::size_t self) { g.grad(xi).vec() += factor * g.grad(self).vec(); },
      "scale");
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  Tensor<T> y = Tensor<T>::scalar(x.value().vec().sum());
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi](Graph<T>& g, std::size_t self) { g.grad(xi).vec().array() += g.grad(self)[0]; }, "sum");
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  detail::require(x.value().size() > 0, "mean of empty tensor");
  return scale(sum(x), T(1) / T(x.value().size()));
}

// Columnwise concatenation of matrices with equal row counts.
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool req = false;
  for (const auto& p : parts) {
    detail::require(p.rows() == rows, "concat_cols: row mismatch " + detail::dims(p));
    cols += p.cols();
    req = req || p.requires_grad();
  }
  Tensor<T> y = Tensor<T>::matrix(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    y.mat().middleCols(Eigen::Index(offset), Eigen::Index(p.cols())) = p.value().mat();
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.cols();
  }
  return parts.front().graph().record(
      std::move(y), req,
      [ids, offsets](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).mat();
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!g.requires_grad(ids[k])) continue;
          auto& dx = g.grad(ids[k]);
          dx.mat() += dy.middleCols(Eigen::Index(offsets[k]), Eigen::Index(dx.cols()));
        }
      },
      "concat_cols");
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t begin, std::size_t count) {
  detail::require(begin + count <= x.cols(), "slice_cols out of range on " + detail::dims(x));
  Tensor<T> y = Tensor<T>::matrix(x.rows(), count);
  y.mat() = x.value().mat().middleCols(Eigen::Index(begin), Eigen::Index(count));
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi, begin, count](Graph<T>& g, std::size_t self) {
        g.grad(xi).mat().middleCols(Eigen::Index(begin), Eigen::Index(count)) += g.grad(self).mat();
      },
      "slice_cols");
}

template <typename T>
Var<T> slice_rows(const Var<T>& x, std::size_t begin, std::size_t count) {
  detail::require(begin + count <= x.rows(), "slice_rows out of range on " + detail::dims(x));
  const std::size_t cols = x.cols();
  std::vector<T> data(x.value().data().begin() + std::ptrdiff_t(begin * cols),
                      x.value().data().begin() + std::ptrdiff_t((begin + count) * cols));
  const std::size_t xi = x.id();
  return x.graph().record(
      Tensor<T>(Shape{count, cols}, std::move(data)), x.requires_grad(),
      [xi, begin, count](Graph<T>& g, std::size_t self) {
        g.grad(xi).mat().middleRows(Eigen::Index(begin), Eigen::Index(count)) += g.grad(self).mat();
      },
      "slice_rows");
}

// Rowwise concatenation of matrices with equal column counts.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool req = false;
  for (const auto& p : parts) {
    detail::require(p.cols() == cols, "concat_rows: column mismatch " + detail::dims(p));
    rows += p.rows();
    req = req || p.requires_grad();
  }
  Tensor<T> y = Tensor<T>::matrix(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(),
              y.data().begin() + std::ptrdiff_t(offset * cols));
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.rows();
  }
  return parts.front().graph().record(
      std::move(y), req,
      [ids, offsets](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).mat();
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!g.requires_grad(ids[k])) continue;
          auto& dx = g.grad(ids[k]);
          dx.mat() += dy.middleRows(Eigen::Index(offsets[k]), Eigen::Index(dx.rows()));
        }
      },
      "concat_rows");
}

// y[r] = x[index[r]]; a negative index yields a zero row. Used for embedding
// lookup (x a parameter table) and for packing/unpacking padded batches.
template <typename T>
Var<T> gather_rows(const Var<T>& x, std::vector<std::int64_t> index) {
  const std::size_t cols = x.cols();
  Tensor<T> y = Tensor<T>::matrix(index.size(), cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    const std::int64_t src = index[r];
    if (src < 0) continue;
    detail::require(std::size_t(src) < x.rows(),
                    "gather_rows: index " + std::to_string(src) + " out of range for " + detail::dims(x));
    std::copy_n(x.value().data().begin() + std::ptrdiff_t(std::size_t(src) * cols), cols,
                y.data().begin() + std::ptrdiff_t(r * cols));
  }
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi, index = std::move(index), cols](Graph<T>& g, std::size_t self) {
        const auto& dy = g.grad(self);
        auto& dx = g.grad(xi);
        for (std::size_t r = 0; r < index.size(); ++r) {
          if (index[r] < 0) continue;
          T* dst = dx.data().data() + std::size_t(index[r]) * cols;
          const T* src = dy.data().data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      },
      "gather_rows");
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> y = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi](Graph<T>& g, std::size_t self) { g.grad(xi).vec() += g.grad(self).vec(); }, "reshape");
}

// Row r of the result is a[r] where keep[r] != 0, else b[r].
template <typename T>
Var<T> where_rows(const std::vector<std::uint8_t>& keep, const Var<T>& a, const Var<T>& b) {
  detail::require(a.shape() == b.shape() && keep.size() == a.rows(),
                  "where_rows: " + detail::dims(a) + " vs " + detail::dims(b));
  Tensor<T> y(b.value());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    if (keep[r]) y.mat().row(Eigen::Index(r)) = a.value().mat().row(Eigen::Index(r));
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record(
      std::move(y), detail::any_requires_grad({a, b}),
      [keep, ai, bi](Graph<T>& g, std::size_t self) {
        const auto dy = g.grad(self).mat();
        for (std::size_t r = 0; r < keep.size(); ++r) {
          const std::size_t target = keep[r] ? ai : bi;
          if (g.requires_grad(target)) g.grad(target).mat().row(Eigen::Index(r)) += dy.row(Eigen::Index(r));
        }
      },
      "where_rows");
}

// Inverted dropout: survivors are scaled by 1/(1-rate) at train time, eval
// mode is the identity.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::eval || rate == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - rate));
  Tensor<T> mask(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < rate ? T(0) : keep_scale;
  Tensor<T> y(x.shape());
  y.vec() = x.value().vec().cwiseProduct(mask.vec());
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi, mask = std::move(mask)](Graph<T>& g, std::size_t self) {
        g.grad(xi).vec() += g.grad(self).vec().cwiseProduct(mask.vec());
      },
      "dropout");
}

// Row-wise softmax with max shift.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  Tensor<T> probs(logits);
  auto p = probs.mat();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const T m = p.row(r).maxCoeff();
    p.row(r).array() = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return probs;
}

template <typename T>
struct CrossEntropy {
  Var<T> loss;
  Tensor<T> probs;
};

// Mean over rows of -log softmax(logits)[r, target[r]]. An empty batch
// yields a zero loss.
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Var<T>& logits, const std::vector<int>& targets) {
  const std::size_t rows = logits.rows(), classes = logits.cols();
  detail::require(targets.size() == rows, "cross_entropy: " + std::to_string(targets.size()) +
                                              " targets for " + detail::dims(logits));
  for (int t : targets) {
    if (t < 0 || std::size_t(t) >= classes) {
      throw DimensionError("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
  }
  Tensor<T> probs = rows ? softmax_rows(logits.value()) : Tensor<T>(logits.shape());
  T total = 0;
  const auto& lv = logits.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = lv.mat().row(Eigen::Index(r));
    const T m = row.maxCoeff();
    const T lse = m + std::log((row.array() - m).exp().sum());
    total += lse - lv.at(r, std::size_t(targets[r]));
  }
  const T loss = rows ? total / T(rows) : T(0);
  const std::size_t li = logits.id();
  Var<T> out = logits.graph().record(
      Tensor<T>::scalar(loss), logits.requires_grad() && rows > 0,
      [li, probs, targets](Graph<T>& g, std::size_t self) {
        const T dy = g.grad(self)[0] / T(targets.size());
        auto& dx = g.grad(li);
        dx.vec() += dy * probs.vec();
        for (std::size_t r = 0; r < targets.size(); ++r) dx.at(r, std::size_t(targets[r])) -= dy;
      },
      "softmax_cross_entropy");
  return {out, std::move(probs)};
}

}  // namespace ops
}  // namespace morphtag
