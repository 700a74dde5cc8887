#pragma once

// Oracle-based checks shared by the unit tests and the acceptance suite.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "morphtag/config.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag::testing {

// One layer or head under finite-difference checking. `run` returns the
// largest relative error over all checked inputs and parameters.
struct GradCase {
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

std::vector<GradCase> gradient_cases();

// Model dimensions small enough for per-parameter finite differences.
ModelConfig grad_check_model_config();

// Brute force over all K^T tag paths.
struct BruteForceCrf {
  double log_z = 0;
  std::vector<int> best_path;
  double best_score = 0;
};
BruteForceCrf brute_force_crf(const Tensor<double>& emissions, const Tensor<double>& transitions,
                              const Tensor<double>& start, const Tensor<double>& end);

struct CrfOracleResult {
  double max_log_z_error = 0;
  bool paths_equal = true;
  std::size_t instances = 0;
};
// Random instances for every T in [1, max_t] and K in [1, max_k].
CrfOracleResult crf_oracle(std::uint64_t seed, std::size_t max_t, std::size_t max_k);

// Perturbs the input features of one token and checks that forward states
// and forward LM logits before it, and backward ones after it, stay
// bit-identical while the rest of the batch is untouched. Also requires
// that the perturbation does reach the states it may influence.
struct CausalityResult {
  bool prefix_only = true;    // forward heads unchanged left of the probe
  bool suffix_only = true;    // backward heads unchanged right of the probe
  bool isolated = true;       // other sentences unchanged
  bool reaches = true;        // states at and beyond the probe do change
  std::size_t probes = 0;
};
CausalityResult causality_probe(std::uint64_t seed);

}  // namespace morphtag::testing
