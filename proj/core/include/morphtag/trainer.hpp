#pragma once

// Training loop, evaluation and transfer between tagsets.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphtag/config.hpp"
#include "morphtag/embeddings.hpp"
#include "morphtag/model_io.hpp"
#include "morphtag/optim.hpp"
#include "morphtag/tagger.hpp"

namespace morphtag {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_acc = 0;
  double dev_acc = 0;
};

struct MetricsReport {
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0;
  std::size_t train_tokens = 0;
  std::size_t dev_tokens = 0;
  std::optional<double> test_acc;
  std::size_t test_tokens = 0;

  nlohmann::json to_json() const;
  // One {"epoch", "train_loss", "train_acc", "dev_acc"} object per line.
  std::string jsonl() const;
};

nlohmann::json to_json(const EpochMetrics& m);

template <typename T>
struct TrainHooks {
  // After every optimizer step, with the 1-based epoch and step in epoch.
  std::function<void(TaggerModel<T>&, std::size_t epoch, std::size_t step)> after_step;
  // After every epoch's evaluation; returning false stops training.
  std::function<bool(TaggerModel<T>&, const EpochMetrics&)> after_epoch;
  std::function<void(const std::string&)> log;
};

// Parameters held fixed for the first `epochs` epochs, then released.
struct FreezePlan {
  std::vector<std::string> names;
  std::size_t epochs = 0;
};

template <typename T>
struct TrainResult {
  TaggerModel<T> model;
  MetricsReport report;
};

struct EvalResult {
  double accuracy = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Lexicon, pretrained vectors and char-encoder init named by the config.
struct TrainingResources {
  Vocabs vocabs;
  std::shared_ptr<const GrammemeLexicon> lexicon;
  std::optional<EmbeddingTable> embeddings;
  std::optional<CharInit> char_init;
};

TrainingResources load_resources(const Corpus& train, const TrainConfig& cfg);

// Categories of a tag-filter file: one per line, blank lines and '#'
// comments ignored.
std::vector<std::string> read_tag_filter(const std::string& path);
std::vector<std::string> parse_tag_filter(std::string_view text);

// Full-tag exact match; with a filter both tags are first projected onto
// POS plus the filter's categories.
double tag_accuracy(const Corpus& gold, const std::vector<std::vector<std::string>>& predicted,
                    const std::vector<std::string>* tag_filter, std::size_t* correct = nullptr,
                    std::size_t* total = nullptr);

void check_training_data(const Corpus& train, const Corpus& dev);

namespace detail {

template <typename T>
double batch_accuracy(TaggerModel<T>& model, const std::vector<Batch>& batches) {
  std::size_t correct = 0, total = 0;
  for (const auto& b : batches) {
    const auto pred = model.predict(b);
    for (std::size_t s = 0; s < b.sentences; ++s) {
      for (std::size_t t = 0; t < b.lengths[s]; ++t) {
        const int gold = tag_class(b.tag_ids[b.at(s, t)]);
        correct += gold >= 0 && pred[s][t] == gold ? 1 : 0;
        ++total;
      }
    }
  }
  return total ? double(correct) / double(total) : 0.0;
}

template <typename T>
std::vector<Tensor<T>> snapshot(TaggerModel<T>& model) {
  std::vector<Tensor<T>> out;
  for (auto* p : model.parameters().all()) out.push_back(p->value);
  return out;
}

template <typename T>
void restore(TaggerModel<T>& model, const std::vector<Tensor<T>>& values) {
  const auto params = model.parameters().all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace detail

// Adds the char-embedding head when lambda_emb > 0.
template <typename T>
void attach_embedding_objective(TaggerModel<T>& model, const Corpus& train, const TrainingResources& res,
                                const TrainConfig& cfg, Rng& rng) {
  if (cfg.lambda_emb == 0) return;
  if (!res.embeddings) throw ConfigError("lambda_emb > 0 needs embeddings_path");
  auto* encoder = model.representation().char_encoder();
  if (!encoder) throw ConfigError("lambda_emb > 0 needs a char encoder");
  const auto words = select_pretrain_words(train, *res.embeddings, false, cfg.model.features.lowercase);
  model.attach_embedding_head(PretrainHead<T>(encoder->output_dim(), *res.embeddings, words, true, rng));
}

// Fresh model for `train` as configured: vocabularies from the corpus (or
// the char init), word vectors and char encoder loaded when named.
template <typename T>
TaggerModel<T> build_model(const Corpus& train, const TrainConfig& cfg) {
  cfg.validate();
  const TrainingResources res = load_resources(train, cfg);
  Rng rng(cfg.seed);
  TaggerModel<T> model(cfg.model, res.vocabs, res.lexicon, rng);
  if (res.embeddings && cfg.model.features.use_word_embedding) {
    model.representation().init_word_embeddings(*res.embeddings, model.vocabs().words);
  }
  if (res.char_init) apply_char_init(*res.char_init, *model.representation().char_encoder());
  attach_embedding_objective(model, train, res, cfg, rng);
  return model;
}

// Seeded shuffle, batching, total loss, backward, clipping and an Adam
// step per batch; dev evaluation after every epoch. The returned model
// holds the parameters of the best dev epoch (earliest on ties).
template <typename T>
TrainResult<T> train(TaggerModel<T> model, const Corpus& train_corpus, const Corpus& dev, const TrainConfig& cfg,
                     const TrainHooks<T>& hooks = {}, const FreezePlan& freeze = {}) {
  cfg.validate();
  check_training_data(train_corpus, dev);
  const auto log = [&](const std::string& line) {
    if (hooks.log) hooks.log(line);
  };
  Rng rng(cfg.seed);
  Adam<T> adam(cfg.optimizer);
  const LossWeights weights{cfg.lambda_pos, cfg.lambda_word, cfg.lambda_emb};
  const auto train_eval = model.make_batches(train_corpus, cfg.batch_size);
  const auto dev_eval = model.make_batches(dev, cfg.batch_size);

  std::vector<Parameter<T>*> frozen;
  std::vector<bool> was_frozen;
  for (const auto& name : freeze.names) {
    Parameter<T>* p = model.find_parameter(name);
    if (!p) throw LookupError("cannot freeze unknown parameter '" + name + "'");
    frozen.push_back(p);
    was_frozen.push_back(p->frozen);
  }
  const auto set_frozen = [&](bool on) {
    for (std::size_t i = 0; i < frozen.size(); ++i) frozen[i]->frozen = on || was_frozen[i];
  };

  MetricsReport report;
  report.train_tokens = count_tokens(train_corpus);
  report.dev_tokens = count_tokens(dev);
  std::vector<Tensor<T>> best = detail::snapshot(model);
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (freeze.epochs > 0 && epoch == 1) set_frozen(true);
    if (freeze.epochs > 0 && epoch == freeze.epochs + 1) {
      set_frozen(false);
      adam.set_lr_scale(cfg.unfreeze_lr_multiplier);
      log("unfreezing all layers");
    }
    const auto params = model.trainable_parameters();
    const auto batches = model.make_batches(train_corpus, cfg.batch_size, &rng);
    double loss_sum = 0;
    std::size_t loss_tokens = 0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const Batch& batch = batches[step];
      if (batch.tokens() == 0) continue;
      Adam<T>::zero_grad(params);
      Graph<T> g;
      const auto fw = model.forward(g, batch, Mode::train, rng);
      const auto losses = model.losses(g, fw, batch, weights, Mode::train, rng);
      g.backward(losses.total);
      clip_global_norm(params, cfg.clip_norm);
      adam.step(params);
      loss_sum += double(losses.total.value().item()) * double(batch.tokens());
      loss_tokens += batch.tokens();
      if (hooks.after_step) hooks.after_step(model, epoch, step + 1);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_tokens ? loss_sum / double(loss_tokens) : 0.0;
    m.train_acc = detail::batch_accuracy(model, train_eval);
    m.dev_acc = detail::batch_accuracy(model, dev_eval);
    report.epochs.push_back(m);
    log("epoch " + std::to_string(epoch) + " loss " + std::to_string(m.train_loss) + " train_acc " +
        std::to_string(m.train_acc) + " dev_acc " + std::to_string(m.dev_acc));
    if (!have_best || m.dev_acc > report.best_dev_acc) {
      have_best = true;
      report.best_dev_acc = m.dev_acc;
      report.best_epoch = epoch;
      best = detail::snapshot(model);
    }
    const bool keep_going = !hooks.after_epoch || hooks.after_epoch(model, m);
    if (!keep_going) break;
    if (epoch - report.best_epoch >= cfg.patience) {
      log("early stop: no dev improvement for " + std::to_string(cfg.patience) + " epochs");
      break;
    }
  }
  set_frozen(false);
  detail::restore(model, best);
  return {std::move(model), std::move(report)};
}

template <typename T>
TrainResult<T> train_from_scratch(const Corpus& train_corpus, const Corpus& dev, const TrainConfig& cfg,
                                  const TrainHooks<T>& hooks = {}) {
  check_training_data(train_corpus, dev);
  return train(build_model<T>(train_corpus, cfg), train_corpus, dev, cfg, hooks);
}

template <typename T>
EvalResult evaluate(TaggerModel<T>& model, const Corpus& corpus, const std::vector<std::string>* tag_filter = nullptr,
                    std::size_t batch_size = 32, std::size_t threads = 1) {
  EvalResult r;
  const auto predicted = model.tag_corpus(corpus, batch_size, threads);
  r.accuracy = tag_accuracy(corpus, predicted, tag_filter, &r.correct, &r.total);
  return r;
}

// Parameters a transfer run initialises fresh: the tag output layer, the
// POS-LM heads and the CRF, all of which depend on the tagset.
bool is_tagset_specific(const std::string& parameter_name);

// Model for the new corpus initialised from `base`: same features,
// encoder and vocabularies except tags, with every tagset-independent
// tensor copied. Returns the names of the copied tensors.
template <typename T>
std::pair<TaggerModel<T>, std::vector<std::string>> transfer_model(TaggerModel<T>& base, const Corpus& train_corpus,
                                                                   const TrainConfig& cfg) {
  const ModelConfig& bc = base.config();
  if (!(bc.features == cfg.model.features)) {
    throw ConfigError("transfer: feature configuration differs from the base model's");
  }
  if (bc.encoder_layers != cfg.model.encoder_layers || bc.encoder_hidden != cfg.model.encoder_hidden ||
      bc.pre_output_dim != cfg.model.pre_output_dim) {
    throw ConfigError("transfer: encoder dimensions differ from the base model's");
  }
  Vocabs vocabs = base.vocabs();
  vocabs.tags = build_vocabs(train_corpus, {cfg.min_word_freq, cfg.max_word_vocab, cfg.model.features.lowercase}).tags;
  Rng rng(cfg.seed);
  TaggerModel<T> model(cfg.model, std::move(vocabs), base.lexicon(), rng);
  std::vector<std::string> copied;
  for (auto* p : model.parameters().all()) {
    if (is_tagset_specific(p->name)) continue;
    Parameter<T>* src = base.find_parameter(p->name);
    if (!src) continue;
    if (src->value.shape() != p->value.shape()) {
      throw ConfigError("transfer: tensor '" + p->name + "' has a different shape in the base model");
    }
    p->value = src->value;
    copied.push_back(p->name);
  }
  return {std::move(model), std::move(copied)};
}

// Fine-tunes a copy of `base` on a new tagset. Copied tensors stay frozen
// (batch-norm statistics included) for cfg.freeze_epochs epochs.
template <typename T>
TrainResult<T> transfer(TaggerModel<T>& base, const Corpus& train_corpus, const Corpus& dev, const TrainConfig& cfg,
                        const TrainHooks<T>& hooks = {}) {
  cfg.validate();
  check_training_data(train_corpus, dev);
  auto [model, copied] = transfer_model(base, train_corpus, cfg);
  if (cfg.lambda_emb != 0) {
    TrainConfig no_char_init = cfg;
    no_char_init.char_init_path.clear();
    const TrainingResources res = load_resources(train_corpus, no_char_init);
    Rng rng(cfg.seed + 1);
    attach_embedding_objective(model, train_corpus, res, cfg, rng);
  }
  return train(std::move(model), train_corpus, dev, cfg, hooks, FreezePlan{std::move(copied), cfg.freeze_epochs});
}

}  // namespace morphtag
