#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "morphtag/error.hpp"
#include "morphtag/graph.hpp"

namespace morphtag {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Scales all non-frozen gradients so their joint L2 norm is at most
// max_norm. Returns the norm before clipping.
template <typename T>
double clip_global_norm(const std::vector<Parameter<T>*>& params, double max_norm) {
  double sq = 0;
  for (const auto* p : params) {
    if (p->frozen) continue;
    for (T g : p->grad.data()) sq += double(g) * double(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T factor = T(max_norm / norm);
    for (auto* p : params) {
      if (!p->frozen) p->grad.vec() *= factor;
    }
  }
  return norm;
}

// Adaptive moment estimation. Frozen parameters are skipped entirely, so
// their values and moment estimates stay untouched.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {
    if (!(config_.learning_rate > 0)) throw ConfigError("learning rate must be positive");
  }

  void step(const std::vector<Parameter<T>*>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, double(t_));
    const T lr = T(config_.learning_rate * lr_scale_);
    const T b1 = T(config_.beta1), b2 = T(config_.beta2), eps = T(config_.epsilon);
    for (auto* p : params) {
      if (p->frozen) continue;
      auto& [m, v] = moments_[p];
      if (m.size() != p->value.size()) {
        m.assign(p->value.size(), T(0));
        v.assign(p->value.size(), T(0));
      }
      auto& value = p->value;
      const auto& grad = p->grad;
      for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        const T m_hat = m[i] / T(bc1);
        const T v_hat = v[i] / T(bc2);
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

  static void zero_grad(const std::vector<Parameter<T>*>& params) {
    for (auto* p : params) p->zero_grad();
  }

  // Multiplier on the configured learning rate (used after unfreezing).
  void set_lr_scale(double scale) { lr_scale_ = scale; }
  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  struct Moments {
    std::vector<T> m;
    std::vector<T> v;
  };
  AdamConfig config_;
  double lr_scale_ = 1.0;
  long t_ = 0;
  std::unordered_map<const Parameter<T>*, Moments> moments_;
};

}  // namespace morphtag
