#include <gtest/gtest.h>

#include <cmath>

#include "morphtag/error.hpp"
#include "morphtag/layers.hpp"

namespace morphtag {
namespace {

Tensor<double> random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor<double> t = Tensor<double>::matrix(r, c);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

Tensor<double> row_block(const Tensor<double>& t, std::size_t begin, std::size_t count) {
  Tensor<double> out = Tensor<double>::matrix(count, t.cols());
  out.mat() = t.mat().middleRows(Eigen::Index(begin), Eigen::Index(count));
  return out;
}

TEST(Lstm, ZeroParametersGiveZeroHidden) {
  Rng rng(1);
  LstmParams<double> p("l", 3, 2, rng);
  p.input_weights.value.zero();
  p.recurrent_weights.value.zero();
  p.bias.value.zero();
  Graph<double> g(false);
  const auto x = g.input(random_matrix(1, 3, rng));
  const LstmState<double> s{g.constant(Tensor<double>::matrix(1, 2)), g.constant(Tensor<double>::matrix(1, 2))};
  const auto out = lstm_step(g, x, s, p);
  for (double v : out.h.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, ForgetBiasIsOne) {
  Rng rng(1);
  LstmParams<double> p("l", 3, 2, rng);
  const std::vector<double> expected{0, 0, 1, 1, 0, 0, 0, 0};
  EXPECT_EQ(p.bias.value.storage(), expected);
}

TEST(Lstm, GateActivationsInOpenUnitInterval) {
  // With h = c = 0 the cell state is i * g and h = o * tanh(c), so
  // |c| < 1 and |h| < tanh(1) follow from gates in (0, 1).
  Rng rng(3);
  LstmParams<double> p("l", 4, 5, rng);
  Graph<double> g(false);
  const auto x = g.input(random_matrix(6, 4, rng));
  const LstmState<double> s{g.constant(Tensor<double>::matrix(6, 5)), g.constant(Tensor<double>::matrix(6, 5))};
  const auto out = lstm_step(g, x, s, p);
  for (std::size_t i = 0; i < out.c.value().size(); ++i) {
    EXPECT_LT(std::abs(out.c.value()[i]), 1.0);
    EXPECT_LT(std::abs(out.h.value()[i]), std::tanh(1.0));
  }
}

TEST(Lstm, InputWidthMismatch) {
  Rng rng(1);
  LstmParams<double> p("l", 3, 2, rng);
  Graph<double> g(false);
  const LstmState<double> s{g.constant(Tensor<double>::matrix(1, 2)), g.constant(Tensor<double>::matrix(1, 2))};
  EXPECT_THROW(lstm_step(g, g.input(Tensor<double>::matrix(1, 4)), s, p), DimensionError);
}

TEST(BiLstm, SingleStepConcatenatesBothDirections) {
  Rng rng(2);
  LstmParams<double> f("f", 3, 2, rng), b("b", 3, 2, rng);
  Graph<double> g(false);
  const auto x = g.input(random_matrix(1, 3, rng));
  const auto states = bilstm_forward(g, x, f, b);
  const LstmState<double> zero{g.constant(Tensor<double>::matrix(1, 2)), g.constant(Tensor<double>::matrix(1, 2))};
  const auto hf = lstm_step(g, x, zero, f).h.value();
  const auto hb = lstm_step(g, x, zero, b).h.value();
  EXPECT_TRUE(bit_identical(states.fwd.value(), hf));
  EXPECT_TRUE(bit_identical(states.bwd.value(), hb));
  EXPECT_EQ(states.concat.value().storage(), (std::vector<double>{hf[0], hf[1], hb[0], hb[1]}));
}

TEST(BiLstm, EmptySequenceRejected) {
  Rng rng(2);
  LstmParams<double> f("f", 3, 2, rng), b("b", 3, 2, rng);
  Graph<double> g(false);
  EXPECT_THROW(bilstm_forward(g, g.input(Tensor<double>::matrix(0, 3)), f, b), DimensionError);
}

TEST(BiLstm, CausalityProbes) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const std::size_t steps = 2 + rng.index(6);
    LstmParams<double> f("f", 3, 4, rng), b("b", 3, 4, rng);
    const Tensor<double> xs = random_matrix(steps, 3, rng);
    Graph<double> g(false);
    const auto base = bilstm_forward(g, g.input(xs), f, b);
    Tensor<double> last(xs), first(xs);
    for (std::size_t c = 0; c < 3; ++c) {
      last.at(steps - 1, c) += 1.0;
      first.at(0, c) -= 1.0;
    }
    const auto moved_last = bilstm_forward(g, g.input(last), f, b);
    const auto moved_first = bilstm_forward(g, g.input(first), f, b);
    EXPECT_TRUE(bit_identical(row_block(base.fwd.value(), 0, steps - 1),
                              row_block(moved_last.fwd.value(), 0, steps - 1)));
    EXPECT_FALSE(bit_identical(base.fwd.value(), moved_last.fwd.value()));
    EXPECT_TRUE(bit_identical(row_block(base.bwd.value(), 1, steps - 1),
                              row_block(moved_first.bwd.value(), 1, steps - 1)));
    EXPECT_FALSE(bit_identical(base.bwd.value(), moved_first.bwd.value()));
  }
}

TEST(BiLstm, MaskedBatchMatchesSeparateSequences) {
  Rng rng(4);
  LstmParams<double> f("f", 3, 4, rng), b("b", 3, 4, rng);
  const std::vector<std::size_t> lengths{4, 2, 3};
  const std::size_t steps = 4, batch = 3;
  Tensor<double> xs = random_matrix(steps * batch, 3, rng);
  std::vector<std::uint8_t> valid(steps * batch);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t s = 0; s < batch; ++s) valid[t * batch + s] = t < lengths[s];
  }
  Graph<double> g(false);
  const auto joint = bilstm_forward(g, g.input(xs), batch, valid, f, b);
  for (std::size_t s = 0; s < batch; ++s) {
    Tensor<double> own = Tensor<double>::matrix(lengths[s], 3);
    for (std::size_t t = 0; t < lengths[s]; ++t) own.mat().row(Eigen::Index(t)) = xs.mat().row(Eigen::Index(t * batch + s));
    const auto alone = bilstm_forward(g, g.input(own), f, b);
    for (std::size_t t = 0; t < lengths[s]; ++t) {
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_NEAR(joint.fwd.value().at(t * batch + s, c), alone.fwd.value().at(t, c), 1e-14);
        EXPECT_NEAR(joint.bwd.value().at(t * batch + s, c), alone.bwd.value().at(t, c), 1e-14);
      }
    }
  }
}

TEST(BatchNorm, TrainOutputIsStandardized) {
  Rng rng(5);
  BatchNormState<double> state("bn", 3);
  Graph<double> g(false);
  const auto y = batch_norm(g, g.input(random_matrix(8, 3, rng)), state, Mode::train);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < 8; ++r) mean += y.value().at(r, j) / 8;
    for (std::size_t r = 0; r < 8; ++r) var += std::pow(y.value().at(r, j) - mean, 2) / 8;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatisticsUseMomentumAndUnbiasedVariance) {
  BatchNormState<double> state("bn", 1);
  Graph<double> g(false);
  batch_norm(g, g.input(from_rows<double>({{1}, {2}, {6}})), state, Mode::train);
  // mean 3, unbiased variance 7
  EXPECT_NEAR(state.running_mean.value[0], 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(state.running_var.value[0], 0.9 * 1.0 + 0.1 * 7.0, 1e-12);
  batch_norm(g, g.input(from_rows<double>({{1}, {2}, {6}})), state, Mode::train, false);
  EXPECT_NEAR(state.running_mean.value[0], 0.3, 1e-12);
}

TEST(BatchNorm, EvalUsesRunningStatsWithoutMutation) {
  BatchNormState<double> state("bn", 2);
  state.gamma.value.fill(2.0);
  state.beta.value.fill(3.0);
  state.running_mean.value = Tensor<double>(Shape{2}, {0.5, -1.0});
  state.running_var.value = Tensor<double>(Shape{2}, {4.0, 0.25});
  const auto mean_before = state.running_mean.value, var_before = state.running_var.value;
  Graph<double> g(false);
  const auto y = batch_norm(g, g.input(from_rows<double>({{0.5, -1.0}, {0.5, -1.0}})), state, Mode::eval);
  for (double v : y.value().data()) EXPECT_DOUBLE_EQ(v, 3.0);
  EXPECT_TRUE(bit_identical(state.running_mean.value, mean_before));
  EXPECT_TRUE(bit_identical(state.running_var.value, var_before));
}

TEST(BatchNorm, SingleRowTrainBatchRejected) {
  BatchNormState<double> state("bn", 2);
  Graph<double> g(false);
  EXPECT_THROW(batch_norm(g, g.input(Tensor<double>::matrix(1, 2)), state, Mode::train), DimensionError);
  EXPECT_THROW(BatchNormState<double>("bn", 2, 0.9, 0.0), ConfigError);
}

}  // namespace
}  // namespace morphtag
