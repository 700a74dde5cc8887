#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "morphtag/error.hpp"
#include "morphtag/grad_check.hpp"
#include "morphtag/graph.hpp"
#include "morphtag/ops.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {
namespace {

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  const Tensor<float> t(Shape{2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, ScalarItem) {
  EXPECT_EQ(Tensor<double>::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor<double>(Shape{2}).item(), DimensionError);
}

TEST(Tensor, DefaultIsNotAScalar) {
  EXPECT_FALSE(Tensor<float>().same_shape(Tensor<float>::scalar(0)));
}

TEST(Tensor, BitIdenticalDistinguishesSignedZero) {
  Tensor<float> a(Shape{1}), b(Shape{1});
  b[0] = -0.0f;
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(bit_identical(a, b));
}

TEST(Graph, SumGradientIsOnes) {
  Graph<double> g;
  const auto x = g.input(Tensor<double>(Shape{2, 3}));
  g.backward(ops::sum(x));
  for (double v : x.grad().data()) EXPECT_EQ(v, 1.0);
}

TEST(Graph, ReuseAccumulates) {
  Graph<double> g;
  const auto x = g.input(Tensor<double>(Shape{4}));
  g.backward(ops::sum(ops::add(x, x)));
  for (double v : x.grad().data()) EXPECT_EQ(v, 2.0);
}

TEST(Graph, ParameterGradientsAccumulateAcrossGraphs) {
  Parameter<double> p("p", Tensor<double>(Shape{3}));
  for (int i = 0; i < 2; ++i) {
    Graph<double> g;
    g.backward(ops::sum(g.param(p)));
  }
  for (double v : p.grad.data()) EXPECT_EQ(v, 2.0);
}

TEST(Graph, FrozenParameterGetsNoGradient) {
  Parameter<double> p("p", Tensor<double>(Shape{3}));
  p.frozen = true;
  Graph<double> g;
  const auto v = g.param(p);
  EXPECT_FALSE(v.requires_grad());
  g.backward(ops::sum(v));
  for (double x : p.grad.data()) EXPECT_EQ(x, 0.0);
}

TEST(Graph, NonScalarLossRejected) {
  Graph<double> g;
  const auto x = g.input(Tensor<double>(Shape{2}));
  EXPECT_THROW(g.backward(x), GraphError);
}

TEST(Graph, DoubleBackwardRejectedUntilReset) {
  Graph<double> g;
  auto x = g.input(Tensor<double>(Shape{2}));
  g.backward(ops::sum(x));
  EXPECT_THROW(g.backward(ops::sum(x)), GraphError);
  g.reset();
  x = g.input(Tensor<double>(Shape{2}));
  EXPECT_NO_THROW(g.backward(ops::sum(x)));
}

TEST(Graph, NonFiniteValuesAreErrors) {
  Graph<double> g;
  Tensor<double> bad(Shape{1});
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(g.input(bad), NumericError);
  const auto big = g.input(Tensor<double>(Shape{1}, {1e308}));
  EXPECT_THROW(ops::scale(big, 10.0), NumericError);
}

TEST(Graph, NoGradGraphRecordsNoGradients) {
  Graph<double> g(false);
  const auto x = g.input(Tensor<double>(Shape{2}));
  EXPECT_FALSE(x.requires_grad());
}

TEST(GradCheck, SquareAtThree) {
  const auto r = grad_check(
      [](Graph<double>&, const std::vector<Var<double>>& in) { return ops::sum(ops::mul(in[0], in[0])); },
      {Tensor<double>(Shape{1}, {3.0})});
  EXPECT_LT(r.max_relative_error, 1e-7);
}

// A scale op whose backward is off by a factor of two.
Var<double> broken_double(const Var<double>& x) {
  Tensor<double> y(x.value());
  y.vec() *= 2.0;
  const std::size_t xi = x.id();
  return x.graph().record(
      std::move(y), x.requires_grad(),
      [xi](Graph<double>& g, std::size_t self) { g.grad(xi).vec() += g.grad(self).vec(); }, "broken_double");
}

TEST(GradCheck, DetectsWrongGradient) {
  const auto r = grad_check(
      [](Graph<double>&, const std::vector<Var<double>>& in) { return ops::sum(broken_double(in[0])); },
      {Tensor<double>(Shape{3}, {0.5, -1.0, 2.0})});
  EXPECT_NEAR(r.max_relative_error, 1.0 / 3.0, 1e-6);
}

}  // namespace
}  // namespace morphtag
