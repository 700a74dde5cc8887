#pragma once

// Linear-chain CRF over per-token emission scores. A path y scores
//   start[y0] + sum_t emissions[t, y_t] + sum_t transitions[y_{t-1}, y_t] + end[y_{T-1}]
// and the likelihood normalises over all K^T paths with the forward algorithm.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "morphtag/graph.hpp"
#include "morphtag/layers.hpp"

namespace morphtag {

template <typename T>
struct CrfParams {
  Parameter<T> transitions;  // [K x K], from row tag to column tag
  Parameter<T> start_scores;  // [K]
  Parameter<T> end_scores;    // [K]

  CrfParams() = default;
  explicit CrfParams(std::size_t tags, const std::string& name = "crf")
      : transitions(name + ".transitions", Tensor<T>::matrix(tags, tags)),
        start_scores(name + ".start", Tensor<T>(Shape{tags})),
        end_scores(name + ".end", Tensor<T>(Shape{tags})) {}

  std::size_t tags() const { return start_scores.value.size(); }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&transitions);
    refs.trainable.push_back(&start_scores);
    refs.trainable.push_back(&end_scores);
  }
};

namespace crf {

template <typename T>
T log_sum_exp(const T* values, std::size_t n) {
  T m = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, values[i]);
  if (!std::isfinite(m)) return m;
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(values[i] - m);
  return m + std::log(s);
}

template <typename T>
void check_inputs(const Tensor<T>& emissions, const Tensor<T>& transitions, const Tensor<T>& start,
                  const Tensor<T>& end) {
  const std::size_t k = emissions.cols();
  if (emissions.rows() == 0) throw DimensionError("crf: empty sequence");
  if (transitions.rows() != k || transitions.cols() != k || start.size() != k || end.size() != k) {
    throw DimensionError("crf: emissions " + shape_string(emissions.shape()) + " vs transitions " +
                         shape_string(transitions.shape()));
  }
  if (!emissions.all_finite()) throw NumericError("crf: non-finite emissions");
}

template <typename T>
T path_score(const Tensor<T>& emissions, const std::vector<int>& path, const Tensor<T>& transitions,
             const Tensor<T>& start, const Tensor<T>& end) {
  T score = start[std::size_t(path.front())] + end[std::size_t(path.back())];
  for (std::size_t t = 0; t < path.size(); ++t) {
    score += emissions.at(t, std::size_t(path[t]));
    if (t > 0) score += transitions.at(std::size_t(path[t - 1]), std::size_t(path[t]));
  }
  return score;
}

// alpha[t][j]: log-sum of scores of all prefixes ending in tag j at t.
template <typename T>
Tensor<T> forward_scores(const Tensor<T>& emissions, const Tensor<T>& transitions, const Tensor<T>& start) {
  const std::size_t steps = emissions.rows(), k = emissions.cols();
  Tensor<T> alpha = Tensor<T>::matrix(steps, k);
  std::vector<T> buf(k);
  for (std::size_t j = 0; j < k; ++j) alpha.at(0, j) = start[j] + emissions.at(0, j);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) buf[i] = alpha.at(t - 1, i) + transitions.at(i, j);
      alpha.at(t, j) = log_sum_exp(buf.data(), k) + emissions.at(t, j);
    }
  }
  return alpha;
}

// beta[t][i]: log-sum of scores of all suffixes after tag i at t (end scores included).
template <typename T>
Tensor<T> backward_scores(const Tensor<T>& emissions, const Tensor<T>& transitions, const Tensor<T>& end) {
  const std::size_t steps = emissions.rows(), k = emissions.cols();
  Tensor<T> beta = Tensor<T>::matrix(steps, k);
  std::vector<T> buf(k);
  for (std::size_t i = 0; i < k; ++i) beta.at(steps - 1, i) = end[i];
  for (std::size_t t = steps - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) buf[j] = transitions.at(i, j) + emissions.at(t + 1, j) + beta.at(t + 1, j);
      beta.at(t, i) = log_sum_exp(buf.data(), k);
    }
  }
  return beta;
}

template <typename T>
T log_partition(const Tensor<T>& emissions, const Tensor<T>& transitions, const Tensor<T>& start,
                const Tensor<T>& end) {
  check_inputs(emissions, transitions, start, end);
  const Tensor<T> alpha = forward_scores(emissions, transitions, start);
  const std::size_t last = emissions.rows() - 1, k = emissions.cols();
  std::vector<T> buf(k);
  for (std::size_t j = 0; j < k; ++j) buf[j] = alpha.at(last, j) + end[j];
  return log_sum_exp(buf.data(), k);
}

}  // namespace crf

// Negative log-likelihood logZ - score(gold) of one sentence, as a graph
// node with gradients (marginals minus gold indicators) for every input.
template <typename T>
Var<T> crf_log_likelihood(const Var<T>& emissions, const std::vector<int>& gold, const Var<T>& transitions,
                          const Var<T>& start, const Var<T>& end) {
  const auto& ev = emissions.value();
  crf::check_inputs(ev, transitions.value(), start.value(), end.value());
  const std::size_t steps = ev.rows(), k = ev.cols();
  if (gold.size() != steps) throw DimensionError("crf: gold path length mismatch");
  for (int y : gold) {
    if (y < 0 || std::size_t(y) >= k) throw DimensionError("crf: gold tag " + std::to_string(y) + " out of range");
  }
  Tensor<T> alpha = crf::forward_scores(ev, transitions.value(), start.value());
  std::vector<T> buf(k);
  for (std::size_t j = 0; j < k; ++j) buf[j] = alpha.at(steps - 1, j) + end.value()[j];
  const T log_z = crf::log_sum_exp(buf.data(), k);
  const T nll = log_z - crf::path_score(ev, gold, transitions.value(), start.value(), end.value());
  const std::size_t ei = emissions.id(), ti = transitions.id(), si = start.id(), ni = end.id();
  return emissions.graph().record(
      Tensor<T>::scalar(nll), ops::detail::any_requires_grad({emissions, transitions, start, end}),
      [ei, ti, si, ni, gold, alpha = std::move(alpha), log_z](Graph<T>& g, std::size_t self) {
        const T dy = g.grad(self)[0];
        const auto& em = g.value(ei);
        const auto& tr = g.value(ti);
        const std::size_t steps = em.rows(), k = em.cols();
        const Tensor<T> beta = crf::backward_scores(em, tr, g.value(ni));
        Tensor<T> unary = Tensor<T>::matrix(steps, k);
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t j = 0; j < k; ++j) unary.at(t, j) = std::exp(alpha.at(t, j) + beta.at(t, j) - log_z);
        }
        if (g.requires_grad(ei)) {
          auto& de = g.grad(ei);
          for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t j = 0; j < k; ++j) de.at(t, j) += dy * unary.at(t, j);
            de.at(t, std::size_t(gold[t])) -= dy;
          }
        }
        if (g.requires_grad(si)) {
          auto& ds = g.grad(si);
          for (std::size_t j = 0; j < k; ++j) ds[j] += dy * unary.at(0, j);
          ds[std::size_t(gold.front())] -= dy;
        }
        if (g.requires_grad(ni)) {
          auto& dn = g.grad(ni);
          for (std::size_t j = 0; j < k; ++j) dn[j] += dy * unary.at(steps - 1, j);
          dn[std::size_t(gold.back())] -= dy;
        }
        if (g.requires_grad(ti)) {
          auto& dt = g.grad(ti);
          for (std::size_t t = 1; t < steps; ++t) {
            for (std::size_t i = 0; i < k; ++i) {
              for (std::size_t j = 0; j < k; ++j) {
                dt.at(i, j) += dy * std::exp(alpha.at(t - 1, i) + tr.at(i, j) + em.at(t, j) + beta.at(t, j) - log_z);
              }
            }
            dt.at(std::size_t(gold[t - 1]), std::size_t(gold[t])) -= dy;
          }
        }
      },
      "crf_log_likelihood");
}

template <typename T>
struct ViterbiResult {
  std::vector<int> path;
  T score = 0;
};

// Highest-scoring path. Ties go to the lower tag id, both for backpointers
// and for the final tag.
template <typename T>
ViterbiResult<T> crf_viterbi(const Tensor<T>& emissions, const Tensor<T>& transitions, const Tensor<T>& start,
                             const Tensor<T>& end) {
  crf::check_inputs(emissions, transitions, start, end);
  const std::size_t steps = emissions.rows(), k = emissions.cols();
  Tensor<T> delta = Tensor<T>::matrix(steps, k);
  std::vector<int> back(steps * k, 0);
  for (std::size_t j = 0; j < k; ++j) delta.at(0, j) = start[j] + emissions.at(0, j);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t best = 0;
      T best_score = delta.at(t - 1, 0) + transitions.at(0, j);
      for (std::size_t i = 1; i < k; ++i) {
        const T s = delta.at(t - 1, i) + transitions.at(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      delta.at(t, j) = best_score + emissions.at(t, j);
      back[t * k + j] = int(best);
    }
  }
  ViterbiResult<T> result;
  std::size_t best = 0;
  T best_score = delta.at(steps - 1, 0) + end[0];
  for (std::size_t j = 1; j < k; ++j) {
    const T s = delta.at(steps - 1, j) + end[j];
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  result.score = best_score;
  result.path.assign(steps, 0);
  result.path[steps - 1] = int(best);
  for (std::size_t t = steps - 1; t > 0; --t) result.path[t - 1] = back[t * k + std::size_t(result.path[t])];
  return result;
}

}  // namespace morphtag
