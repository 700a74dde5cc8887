#include <gtest/gtest.h>

#include <cmath>

#include "morphtag/error.hpp"
#include "morphtag/layers.hpp"
#include "morphtag/ops.hpp"
#include "probes.hpp"

namespace morphtag {
namespace {

using testing::GradCase;

class GradientSuite : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientSuite, TenSeedsBelowTolerance) {
  const GradCase& c = GetParam();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EXPECT_LT(c.run(seed), 1e-4) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllLayers, GradientSuite, ::testing::ValuesIn(testing::gradient_cases()),
                         [](const auto& info) {
                           std::string name;
                           for (char ch : info.param.name) name += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
                           return name;
                         });

Tensor<double> rows(const std::vector<std::vector<double>>& r) { return from_rows(r); }

TEST(Dense, IdentityWeights) {
  Graph<double> g(false);
  const auto y = dense_forward(g.input(rows({{1, 2}})), g.input(rows({{1, 0}, {0, 1}})),
                               g.input(Tensor<double>(Shape{2})), Activation::none);
  EXPECT_EQ(y.value(), rows({{1, 2}}));
}

TEST(Dense, ReluClampsNegative) {
  Graph<double> g(false);
  const auto y = dense_forward(g.input(rows({{-1, -1}})), g.input(rows({{1, 1}})), g.input(Tensor<double>(Shape{1})),
                               Activation::relu);
  EXPECT_EQ(y.value().item(), 0.0);
}

TEST(Dense, ShapeMismatchIsDimensionError) {
  Graph<double> g(false);
  EXPECT_THROW(dense_forward(g.input(rows({{1, 2, 3}})), g.input(rows({{1, 1}})), g.input(Tensor<double>(Shape{1})),
                             Activation::none),
               DimensionError);
}

TEST(Dropout, RateZeroAndEvalAreIdentity) {
  Graph<double> g(false);
  Rng rng(1);
  const auto x = g.input(rows({{1, 2, 3}}));
  EXPECT_EQ(ops::dropout(x, 0.0, Mode::train, rng).value(), x.value());
  EXPECT_EQ(ops::dropout(x, 0.3, Mode::eval, rng).value(), x.value());
}

TEST(Dropout, RateOneRejected) {
  Graph<double> g(false);
  Rng rng(1);
  const auto x = g.input(rows({{1}}));
  EXPECT_THROW(ops::dropout(x, 1.0, Mode::train, rng), ConfigError);
  EXPECT_THROW(ops::dropout(x, -0.1, Mode::train, rng), ConfigError);
}

TEST(Dropout, ExpectationPreserved) {
  Graph<double> g(false);
  Rng rng(7);
  Tensor<double> x(Shape{100000});
  x.fill(1.5);
  const auto y = ops::dropout(g.input(x), 0.3, Mode::train, rng);
  double mean = 0;
  std::size_t zeros = 0;
  for (double v : y.value().data()) {
    mean += v;
    zeros += v == 0.0;
    if (v != 0.0) {
      EXPECT_NEAR(v, 1.5 / 0.7, 1e-12);
    }
  }
  mean /= double(x.size());
  EXPECT_NEAR(mean, 1.5, 1.5 * 0.02);
  EXPECT_NEAR(double(zeros) / double(x.size()), 0.3, 0.01);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  Graph<double> g(false);
  const auto ce = ops::softmax_cross_entropy(g.input(rows({{0, 0}})), {0});
  EXPECT_NEAR(ce.probs[0], 0.5, 1e-15);
  EXPECT_NEAR(ce.probs[1], 0.5, 1e-15);
  EXPECT_NEAR(ce.loss.value().item(), std::log(2.0), 1e-15);
}

TEST(SoftmaxCrossEntropy, LargeLogitsStayFinite) {
  Graph<float> g(false);
  const auto ce = ops::softmax_cross_entropy(g.input(from_rows<float>({{1000, 0}})), {0});
  EXPECT_NEAR(ce.loss.value().item(), 0.0f, 1e-6f);
  const auto wrong = ops::softmax_cross_entropy(g.input(from_rows<float>({{1000, 0}})), {1});
  EXPECT_NEAR(wrong.loss.value().item(), 1000.0f, 1e-3f);
}

TEST(SoftmaxCrossEntropy, GradientIsProbsMinusOneHotOverBatch) {
  Graph<double> g;
  const auto logits = g.input(rows({{1, 2, 0.5}, {-1, 0, 3}}));
  const auto ce = ops::softmax_cross_entropy(logits, {2, 0});
  g.backward(ce.loss);
  const std::vector<int> targets{2, 0};
  for (std::size_t r = 0; r < 2; ++r) {
    double row_sum = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      row_sum += ce.probs.at(r, c);
      const double expected = (ce.probs.at(r, c) - (int(c) == targets[r] ? 1.0 : 0.0)) / 2.0;
      EXPECT_NEAR(logits.grad().at(r, c), expected, 1e-15);
    }
    EXPECT_NEAR(row_sum, 1.0, 1e-12);
  }
}

TEST(SoftmaxCrossEntropy, TargetOutOfRange) {
  Graph<double> g(false);
  EXPECT_THROW(ops::softmax_cross_entropy(g.input(rows({{0, 0}})), {2}), DimensionError);
  EXPECT_THROW(ops::softmax_cross_entropy(g.input(rows({{0, 0}})), {-1}), DimensionError);
}

TEST(GatherRows, NegativeIndexGivesZeroRow) {
  Graph<double> g(false);
  const auto y = ops::gather_rows(g.input(rows({{1, 2}, {3, 4}})), {1, -1, 0});
  EXPECT_EQ(y.value(), rows({{3, 4}, {0, 0}, {1, 2}}));
  EXPECT_THROW(ops::gather_rows(g.input(rows({{1, 2}})), {1}), DimensionError);
}

TEST(Clipping, ScalesToMaxNorm) {
  Parameter<double> a("a", Tensor<double>(Shape{2})), b("b", Tensor<double>(Shape{1}));
  a.grad = Tensor<double>(Shape{2}, {3, 0});
  b.grad = Tensor<double>(Shape{1}, {4});
  const double norm = clip_global_norm<double>({&a, &b}, 1.0);
  EXPECT_DOUBLE_EQ(norm, 5.0);
  EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad[0], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(clip_global_norm<double>({&a, &b}, 10.0), 1.0);
  EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", Tensor<double>(Shape{2}, {1.0, -2.0}));
  p.grad = Tensor<double>(Shape{2}, {0.5, -3.0});
  Adam<double> adam(AdamConfig{0.1, 0.9, 0.999, 1e-8});
  adam.step({&p});
  // Bias-corrected m/sqrt(v) equals sign(g) on the first step.
  EXPECT_NEAR(p.value[0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(p.value[1], -2.0 + 0.1, 1e-7);
}

TEST(Adam, SecondStepMatchesHandComputation) {
  Parameter<double> p("p", Tensor<double>(Shape{1}, {0.0}));
  Adam<double> adam(AdamConfig{0.01, 0.9, 0.999, 1e-8});
  p.grad[0] = 1.0;
  adam.step({&p});
  p.grad[0] = -2.0;
  adam.step({&p});
  const double m = 0.9 * 0.1 + 0.1 * -2.0, v = 0.999 * 0.001 + 0.001 * 4.0;
  const double step2 = 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(p.value[0], -0.01 - step2, 1e-9);
}

TEST(Adam, FrozenParametersUntouched) {
  Parameter<double> p("p", Tensor<double>(Shape{1}, {1.0}));
  p.grad[0] = 1.0;
  p.frozen = true;
  Adam<double> adam;
  adam.step({&p});
  EXPECT_EQ(p.value[0], 1.0);
  EXPECT_THROW(Adam<double>(AdamConfig{0.0}), ConfigError);
}

}  // namespace
}  // namespace morphtag
