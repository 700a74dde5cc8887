#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "morphtag/graph.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {

// Scalar function of graph inputs, built fresh on each call.
using ScalarFn = std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
};

// Compares reverse-mode gradients with central differences. The relative
// error per element is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor<double>>& inputs, double h = 1e-5) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& t : inputs) vars.push_back(g.input(t));
    g.backward(f(g, vars));
    for (std::size_t k = 0; k < vars.size(); ++k) {
      analytic.push_back(vars[k].requires_grad() ? g.grad(vars[k].id()) : Tensor<double>(inputs[k].shape()));
    }
  }
  auto evaluate = [&](const std::vector<Tensor<double>>& xs) {
    Graph<double> g(false);
    std::vector<Var<double>> vars;
    for (const auto& t : xs) vars.push_back(g.input(t));
    return f(g, vars).value().item();
  };
  GradCheckResult result;
  std::vector<Tensor<double>> probe(inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + h;
      const double plus = evaluate(probe);
      probe[k][i] = original - h;
      const double minus = evaluate(probe);
      probe[k][i] = original;
      const double numeric = (plus - minus) / (2 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > result.max_relative_error) result = {err, k, i};
    }
  }
  return result;
}

// Same check with respect to parameter tensors, perturbed in place and
// restored afterwards. `f` must be deterministic (eval-mode dropout etc).
inline GradCheckResult grad_check_params(const std::function<Var<double>(Graph<double>&)>& f,
                                         const std::vector<Parameter<double>*>& params, double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    g.backward(f(g));
  }
  std::vector<Tensor<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  auto evaluate = [&] {
    Graph<double> g(false);
    return f(g).value().item();
  };
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value[i];
      value[i] = original + h;
      const double plus = evaluate();
      value[i] = original - h;
      const double minus = evaluate();
      value[i] = original;
      const double numeric = (plus - minus) / (2 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > result.max_relative_error) result = {err, k, i};
    }
  }
  return result;
}

}  // namespace morphtag
