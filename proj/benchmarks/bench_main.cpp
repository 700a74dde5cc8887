#include <benchmark/benchmark.h>

#include "morphtag/crf.hpp"
#include "morphtag/layers.hpp"
#include "morphtag/representations.hpp"
#include "morphtag/trainer.hpp"
#include "synthetic.hpp"

namespace morphtag {
namespace {

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor<float> t = Tensor<float>::matrix(rows, cols);
  for (auto& v : t.data()) v = float(rng.uniform(-1, 1));
  return t;
}

// Args: batch, steps. One 128-unit BiLSTM layer over 128-wide inputs,
// forward and backward.
void BM_BiLstm(benchmark::State& state) {
  const auto batch = std::size_t(state.range(0)), steps = std::size_t(state.range(1));
  Rng rng(1);
  LstmParams<float> fwd("fwd", 128, 128, rng), bwd("bwd", 128, 128, rng);
  const Tensor<float> xs = random_matrix(batch * steps, 128, rng);
  for (auto _ : state) {
    Graph<float> g;
    const auto out = bilstm_forward(g, g.input(xs), batch, {}, fwd, bwd);
    g.backward(ops::sum(out.concat));
    benchmark::DoNotOptimize(fwd.input_weights.grad.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations() * batch * steps));
}
BENCHMARK(BM_BiLstm)->Args({1, 20})->Args({32, 20})->Unit(benchmark::kMillisecond);

// Arg: words. Character feed-forward encoder with default dimensions.
void BM_CharFF(benchmark::State& state) {
  const auto words = std::size_t(state.range(0));
  Rng rng(2);
  const FeatureConfig cfg;
  CharFFParams<float> params(cfg, 60, rng);
  std::vector<int> ids(words * cfg.max_word_length);
  for (auto& id : ids) id = int(rng.uniform(0, 60));
  for (auto _ : state) {
    Graph<float> g;
    const auto out = char_ff_encode(g, ids, words, params, Mode::train, rng);
    g.backward(ops::sum(out));
    benchmark::DoNotOptimize(params.char_embeddings.grad.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations() * words));
}
BENCHMARK(BM_CharFF)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

// Args: tags, length. CRF log-likelihood with gradients, then Viterbi.
void BM_Crf(benchmark::State& state) {
  const auto tags = std::size_t(state.range(0)), length = std::size_t(state.range(1));
  Rng rng(3);
  CrfParams<float> crf(tags);
  crf.transitions.value = random_matrix(tags, tags, rng);
  const Tensor<float> emissions = random_matrix(length, tags, rng);
  std::vector<int> gold(length);
  for (auto& y : gold) y = int(rng.uniform(0, double(tags)));
  for (auto _ : state) {
    Graph<float> g;
    const auto ll = crf_log_likelihood(g.input(emissions), gold, g.param(crf.transitions), g.param(crf.start_scores),
                                       g.param(crf.end_scores));
    g.backward(ll);
    benchmark::DoNotOptimize(
        crf_viterbi(emissions, crf.transitions.value, crf.start_scores.value, crf.end_scores.value).score);
  }
}
BENCHMARK(BM_Crf)->Args({20, 25})->Args({300, 25})->Unit(benchmark::kMicrosecond);

// One optimizer step of the full default tagger on a batch of 32 sentences.
void BM_TrainStep(benchmark::State& state) {
  const testing::SyntheticLanguage lang({});
  const Corpus corpus = lang.sample(32, 1);
  TrainConfig cfg;
  cfg.batch_size = 32;
  Rng rng(4);
  TaggerModel<float> model(cfg.model, build_vocabs(corpus), nullptr, rng);
  const Batch batch = model.make_batches(corpus, 32)[0];
  const LossWeights weights{cfg.lambda_pos, cfg.lambda_word, cfg.lambda_emb};
  Adam<float> adam(cfg.optimizer);
  const auto params = model.trainable_parameters();
  for (auto _ : state) {
    Adam<float>::zero_grad(params);
    Graph<float> g;
    const auto fw = model.forward(g, batch, Mode::train, rng);
    const auto losses = model.losses(g, fw, batch, weights, Mode::train, rng);
    g.backward(losses.total);
    clip_global_norm(params, cfg.clip_norm);
    adam.step(params);
  }
  state.SetItemsProcessed(std::int64_t(state.iterations() * batch.tokens()));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace morphtag

BENCHMARK_MAIN();
