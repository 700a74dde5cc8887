#pragma once

// Character-encoder pretraining against fixed word vectors: a softmax over
// the pretraining vocabulary whose output weights are the word vectors,
// targeting each word's own row.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "morphtag/config.hpp"
#include "morphtag/corpus.hpp"
#include "morphtag/embeddings.hpp"
#include "morphtag/optim.hpp"
#include "morphtag/representations.hpp"

namespace morphtag {

template <typename T>
class PretrainHead {
 public:
  PretrainHead() = default;

  // Output rows are copied from `table` in the order of `words`; repeated
  // words keep their first position.
  PretrainHead(std::size_t encoder_dim, const EmbeddingTable& table, const std::vector<std::string>& words,
               bool output_frozen, Rng& rng) {
    for (const auto& w : words) {
      if (index_.count(w)) continue;
      if (!table.index(w)) throw LookupError("pretraining word '" + w + "' has no embedding row");
      index_.emplace(w, words_.size());
      words_.push_back(w);
    }
    if (words_.empty()) throw ConfigError("pretraining needs a non-empty word list");
    const std::size_t dim = table.dim();
    map_layer = Dense<T>("pretrain_head.map", encoder_dim, dim, Activation::none, rng);
    output_matrix = Parameter<T>("pretrain_head.output", Tensor<T>::matrix(words_.size(), dim));
    output_bias = Parameter<T>("pretrain_head.output_bias", Tensor<T>(Shape{words_.size()}));
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const auto row = table.row(*table.index(words_[i]));
      for (std::size_t k = 0; k < dim; ++k) output_matrix.value.at(i, k) = T(row[k]);
    }
    set_output_frozen(output_frozen);
  }

  Dense<T> map_layer;          // encoder_dim -> embed_dim, no activation
  Parameter<T> output_matrix;  // [vocab x embed_dim]
  Parameter<T> output_bias;    // [vocab]

  bool output_frozen() const { return output_matrix.frozen; }
  void set_output_frozen(bool frozen) {
    output_matrix.frozen = frozen;
    output_bias.frozen = frozen;
  }

  const std::vector<std::string>& words() const { return words_; }
  std::size_t vocab_size() const { return words_.size(); }
  std::optional<std::size_t> find(const std::string& word) const {
    const auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void collect(ParameterRefs<T>& refs) {
    map_layer.collect(refs);
    refs.trainable.push_back(&output_matrix);
    refs.trainable.push_back(&output_bias);
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// map(F(word)) for each form. [N x embed_dim]
template <typename T>
Var<T> pretrain_embed(Graph<T>& g, CharEncoder<T>& encoder, PretrainHead<T>& head,
                      const std::vector<std::string>& forms, const Vocab& chars, Mode mode, Rng& rng,
                      bool lowercase = false) {
  const CharBatch batch = make_char_batch(forms, chars, encoder.word_length(), lowercase);
  return head.map_layer.forward(g, encoder.encode(g, batch, mode, rng));
}

// Mean cross-entropy of softmax(W map(F(w)) + b) against each word's own
// row of W.
template <typename T>
Var<T> pretrain_loss(Graph<T>& g, CharEncoder<T>& encoder, PretrainHead<T>& head,
                     const std::vector<std::string>& words, const Vocab& chars, Mode mode, Rng& rng,
                     bool lowercase = false) {
  if (words.empty()) throw ConfigError("pretrain_loss: empty word batch");
  std::vector<int> targets;
  targets.reserve(words.size());
  for (const auto& w : words) {
    const auto i = head.find(w);
    if (!i) throw LookupError("word '" + w + "' is not in the pretraining vocabulary");
    targets.push_back(int(*i));
  }
  const Var<T> mapped = pretrain_embed(g, encoder, head, words, chars, mode, rng, lowercase);
  const Var<T> logits =
      ops::add_bias(ops::matmul_nt(mapped, g.param(head.output_matrix)), g.param(head.output_bias));
  return ops::softmax_cross_entropy(logits, targets).loss;
}

// The same objective used as an auxiliary term of the tagger loss.
template <typename T>
Var<T> char_embedding_aux_loss(Graph<T>& g, CharEncoder<T>& encoder, PretrainHead<T>& head,
                               const std::vector<std::string>& words, const Vocab& chars, Mode mode, Rng& rng,
                               bool lowercase = false) {
  return pretrain_loss(g, encoder, head, words, chars, mode, rng, lowercase);
}

struct PretrainHooks {
  // Called after each epoch with its 1-based number and mean loss.
  std::function<void(std::size_t, double)> after_epoch;
};

// Trains encoder and head in place. Returns the mean loss of each epoch.
template <typename T>
std::vector<double> pretrain(CharEncoder<T>& encoder, PretrainHead<T>& head, const Vocab& chars,
                             const PretrainConfig& cfg, Rng& rng, const PretrainHooks& hooks = {}) {
  cfg.validate();
  const std::size_t n = head.vocab_size();
  if (n == 0) throw ConfigError("pretraining needs a non-empty word list");
  ParameterRefs<T> refs;
  encoder.collect(refs);
  head.collect(refs);
  Adam<T> adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      std::vector<std::string> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(head.words()[order[k]]);
      Adam<T>::zero_grad(refs.trainable);
      Graph<T> g;
      const Var<T> loss = pretrain_loss(g, encoder, head, batch, chars, Mode::train, rng, cfg.features.lowercase);
      g.backward(loss);
      adam.step(refs.trainable);
      total += double(loss.value().item()) * double(end - begin);
    }
    losses.push_back(total / double(n));
    if (hooks.after_epoch) hooks.after_epoch(epoch, losses.back());
  }
  return losses;
}

// Words for pretraining: corpus forms with an embedding row in order of
// first occurrence, or every embedding word when use_all is set.
std::vector<std::string> select_pretrain_words(const Corpus& corpus, const EmbeddingTable& table, bool use_all,
                                               bool lowercase);

struct Neighbor {
  std::string word;
  double similarity = 0;
};

template <typename T>
double cosine_similarity(std::span<const T> a, std::span<const T> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Top-k pretraining words by cosine between map(F(form)) and the output
// rows. Works for any form; k is clamped to the vocabulary size. Ties keep
// vocabulary order.
template <typename T>
std::vector<Neighbor> nearest_words(CharEncoder<T>& encoder, PretrainHead<T>& head, const Vocab& chars,
                                    const std::string& form, std::size_t k, bool lowercase = false) {
  k = std::min(k, head.vocab_size());
  if (k == 0) return {};
  Graph<T> g(false);
  Rng unused(0);
  const Var<T> v = pretrain_embed(g, encoder, head, {form}, chars, Mode::eval, unused, lowercase);
  const auto query = v.value().data();
  const auto& w = head.output_matrix.value;
  const std::size_t dim = w.cols();
  std::vector<Neighbor> all(head.vocab_size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].word = head.words()[i];
    all[i].similarity = cosine_similarity<T>(std::span<const T>(query.data(), dim),
                                             std::span<const T>(w.data().data() + i * dim, dim));
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  all.resize(k);
  return all;
}

}  // namespace morphtag
