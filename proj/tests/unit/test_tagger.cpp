#include <gtest/gtest.h>

#include <cmath>

#include "morphtag/error.hpp"
#include "morphtag/tagger.hpp"
#include "morphtag/trainer.hpp"
#include "probes.hpp"
#include "synthetic.hpp"

namespace morphtag {
namespace {

struct Fixture {
  Corpus corpus;
  Vocabs vocabs;
  std::shared_ptr<const GrammemeLexicon> lexicon;
};

Fixture make_fixture(std::size_t sentences, std::uint64_t seed) {
  const testing::SyntheticLanguage lang({.tags = 5, .stems_per_tag = 4, .min_length = 1, .max_length = 6});
  Fixture f;
  f.corpus = lang.sample(sentences, seed);
  f.vocabs = build_vocabs(f.corpus);
  f.lexicon = std::make_shared<const GrammemeLexicon>(lang.lexicon());
  return f;
}

ModelConfig no_dropout(ModelConfig m) {
  m.dropout = 0.0;
  m.features.char_ff_dropout = 0.0;
  return m;
}

TEST(Packing, SentenceMajorRowsAndTimeMajorSteps) {
  const Packing p({2, 3});
  EXPECT_EQ(p.tokens, 5u);
  EXPECT_EQ(p.offsets, (std::vector<std::size_t>{0, 2}));
  // time-major row t * 2 + s
  EXPECT_EQ(p.time_to_packed, (std::vector<std::int64_t>{0, 2, 1, 3, -1, 4}));
  EXPECT_EQ(p.valid, (std::vector<std::uint8_t>{1, 1, 1, 1, 0, 1}));
  EXPECT_EQ(p.packed_to_time, (std::vector<std::int64_t>{0, 2, 1, 3, 5}));
}

TEST(Tagger, OutputShapes) {
  const Fixture f = make_fixture(6, 1);
  Rng rng(1);
  TaggerModel<float> model(testing::tiny_model_config(), f.vocabs, nullptr, rng);
  const auto batches = model.make_batches(f.corpus, 6);
  Graph<float> g(false);
  const auto fw = model.forward(g, batches[0], Mode::eval, rng);
  const std::size_t n = batches[0].tokens();
  EXPECT_EQ(fw.concat.value().rows(), n);
  EXPECT_EQ(fw.concat.value().cols(), 24u);
  EXPECT_EQ(fw.logits.value().cols(), model.tag_classes());
  EXPECT_EQ(model.tag_classes(), f.vocabs.tags.size() - 3);
}

TEST(Tagger, EvalForwardIsDeterministic) {
  const Fixture f = make_fixture(5, 2);
  Rng rng(2), a(10), b(20);
  TaggerModel<float> model(testing::tiny_model_config(), f.vocabs, nullptr, rng);
  const auto batch = model.make_batches(f.corpus, 5)[0];
  Graph<float> g(false);
  EXPECT_TRUE(bit_identical(model.forward(g, batch, Mode::eval, a).logits.value(),
                            model.forward(g, batch, Mode::eval, b).logits.value()));
  EXPECT_EQ(model.predict(batch), model.predict(batch));
}

TEST(Tagger, CausalityOfAuxiliaryHeads) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = testing::causality_probe(seed);
    EXPECT_GT(r.probes, 0u);
    EXPECT_TRUE(r.prefix_only) << "seed " << seed;
    EXPECT_TRUE(r.suffix_only) << "seed " << seed;
    EXPECT_TRUE(r.isolated) << "seed " << seed;
    EXPECT_TRUE(r.reaches) << "seed " << seed;
  }
}

TEST(Tagger, MainHeadSeesWholeSentence) {
  const Fixture f = make_fixture(1, 3);
  Rng rng(3);
  TaggerModel<double> model(testing::tiny_model_config(), f.vocabs, nullptr, rng);
  const std::size_t n = 5;
  Tensor<double> x = Tensor<double>::matrix(n, 16);
  for (auto& v : x.data()) v = rng.normal();
  Graph<double> g(false);
  const auto base = model.forward_features(g, g.input(x), {n}, Mode::eval, rng).logits.value();
  for (std::size_t t = 0; t < n; ++t) {
    Tensor<double> moved(x);
    for (std::size_t c = 0; c < 16; ++c) moved.at(t, c) += 1.0;
    const auto out = model.forward_features(g, g.input(moved), {n}, Mode::eval, rng).logits.value();
    for (std::size_t r = 0; r < n; ++r) {
      bool changed = false;
      for (std::size_t c = 0; c < out.cols(); ++c) changed |= out.at(r, c) != base.at(r, c);
      EXPECT_TRUE(changed) << "position " << r << " ignores input " << t;
    }
  }
}

TEST(Tagger, EdgeTargetsForSingleToken) {
  const Packing p({1, 3});
  const auto [next, prev] = TaggerModel<float>::shifted_targets(p, {4, 0, 1, 2}, 7, 8);
  EXPECT_EQ(next, (std::vector<int>{8, 1, 2, 8}));
  EXPECT_EQ(prev, (std::vector<int>{7, 7, 0, 1}));
}

TEST(Tagger, ZeroWeightsLeaveTotalBitExact) {
  const Fixture f = make_fixture(4, 4);
  Rng rng(4);
  TaggerModel<double> model(no_dropout(testing::tiny_model_config()), f.vocabs, nullptr, rng);
  const auto batch = model.make_batches(f.corpus, 4)[0];
  Graph<double> g(false);
  const auto fw = model.forward(g, batch, Mode::eval, rng);
  const auto none = model.losses(g, fw, batch, {0, 0, 0}, Mode::eval, rng);
  EXPECT_TRUE(bit_identical(none.total.value(), none.main.value()));
  EXPECT_FALSE(none.pos.has_value());
  const auto pos = model.losses(g, fw, batch, {1, 0, 0}, Mode::eval, rng);
  EXPECT_EQ(pos.total.value().item(), none.main.value().item() + pos.pos->value().item());
  const auto both = model.losses(g, fw, batch, {0.1, 0.1, 0}, Mode::eval, rng);
  EXPECT_NEAR(both.total.value().item(),
              both.main.value().item() + 0.1 * both.pos->value().item() + 0.1 * both.word->value().item(), 1e-12);
  EXPECT_GE(both.pos->value().item(), 0.0);
  EXPECT_GE(both.word->value().item(), 0.0);
  EXPECT_THROW(model.losses(g, fw, batch, {-0.1, 0, 0}, Mode::eval, rng), ConfigError);
}

TEST(Tagger, UniformAuxLogitsGiveLogClassCount) {
  const Fixture f = make_fixture(3, 5);
  Rng rng(5);
  TaggerModel<double> model(testing::tiny_model_config(), f.vocabs, nullptr, rng);
  for (auto* p : model.parameters().all()) {
    if (p->name.rfind("aux.pos_", 0) == 0) p->value.zero();
  }
  const auto batch = model.make_batches(f.corpus, 3)[0];
  Graph<double> g(false);
  const auto fw = model.forward(g, batch, Mode::eval, rng);
  const auto l = model.losses(g, fw, batch, {1, 0, 0}, Mode::eval, rng);
  EXPECT_NEAR(l.pos->value().item(), std::log(double(model.tag_classes() + 2)), 1e-12);
}

TEST(Tagger, UnseenGoldTagIsLookupError) {
  const Fixture f = make_fixture(3, 6);
  Rng rng(6);
  TaggerModel<float> model(testing::tiny_model_config(), f.vocabs, nullptr, rng);
  Corpus odd = {f.corpus[0]};
  odd[0].tokens[0].tag = "NEVER|Seen=Yes";
  const auto batch = model.make_batches(odd, 1)[0];
  Graph<float> g(false);
  const auto fw = model.forward(g, batch, Mode::eval, rng);
  EXPECT_THROW(model.losses(g, fw, batch, {}, Mode::eval, rng), LookupError);
}

TEST(Tagger, CrfWithZeroTransitionsDecodesLikeArgmax) {
  const Fixture f = make_fixture(8, 7);
  ModelConfig soft = testing::tiny_model_config(), crf = soft;
  crf.use_crf = true;
  Rng r1(7), r2(7);
  TaggerModel<float> a(soft, f.vocabs, nullptr, r1), b(crf, f.vocabs, nullptr, r2);
  const auto batch = a.make_batches(f.corpus, 8)[0];
  EXPECT_EQ(a.predict(batch), b.predict(batch));
}

TEST(Tagger, BatchNormStatisticsIgnorePadding) {
  const Fixture f = make_fixture(4, 8);
  Rng rng(8);
  TaggerModel<double> model(no_dropout(testing::tiny_model_config()), f.vocabs, nullptr, rng);
  const auto batch = model.make_batches(f.corpus, 4)[0];
  ASSERT_LT(batch.tokens(), batch.sentences * batch.max_length);
  Graph<double> g(false);
  const auto fw = model.forward(g, batch, Mode::train, rng);
  // Running mean after one step from zero is 0.1 * mean over the real tokens.
  const auto* weight = model.find_parameter("tag_head.pre_output.weight");
  const auto* bias = model.find_parameter("tag_head.pre_output.bias");
  const Tensor<double>& c = fw.concat.value();
  ASSERT_EQ(c.rows(), batch.tokens());
  for (std::size_t j = 0; j < weight->value.rows(); ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < c.rows(); ++r) {
      double v = bias->value[j];
      for (std::size_t k = 0; k < c.cols(); ++k) v += weight->value.at(j, k) * c.at(r, k);
      mean += v / double(c.rows());
    }
    EXPECT_NEAR(model.batch_norm_state().running_mean.value[j], 0.1 * mean, 1e-12);
  }
}

TEST(Tagger, OverfitsOneSentence) {
  const Fixture f = make_fixture(1, 9);
  TrainConfig cfg = testing::tiny_train_config();
  cfg.max_epochs = 150;
  cfg.optimizer.learning_rate = 1e-2;
  cfg.lambda_word = 0;
  TrainHooks<float> hooks;
  hooks.after_epoch = [](TaggerModel<float>&, const EpochMetrics& m) { return m.train_acc < 1.0; };
  auto result = train_from_scratch<float>(f.corpus, f.corpus, cfg, hooks);
  EXPECT_EQ(result.report.best_dev_acc, 1.0);
  const auto tags = result.model.tag_corpus(f.corpus, 1);
  for (std::size_t t = 0; t < f.corpus[0].size(); ++t) EXPECT_EQ(tags[0][t], f.corpus[0].tokens[t].tag);
}

TEST(Tagger, GrammemeFeaturesNeedLexicon) {
  const Fixture f = make_fixture(3, 10);
  ModelConfig m = testing::tiny_model_config();
  m.features.use_grammemes = true;
  Rng rng(10);
  EXPECT_THROW(TaggerModel<float>(m, f.vocabs, nullptr, rng), ConfigError);
  TaggerModel<float> ok(m, f.vocabs, f.lexicon, rng);
  EXPECT_EQ(ok.make_batches(f.corpus, 3)[0].grammeme_dim, f.lexicon->slot_count());
}

}  // namespace
}  // namespace morphtag
