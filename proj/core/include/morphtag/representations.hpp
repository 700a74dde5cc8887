#pragma once

// Per-word feature encoders: the feedforward and BiLSTM character encoders,
// the grammeme embedding, the word-embedding lookup and the projection that
// composes them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morphtag/config.hpp"
#include "morphtag/embeddings.hpp"
#include "morphtag/features.hpp"
#include "morphtag/layers.hpp"
#include "morphtag/vocab.hpp"

namespace morphtag {

// Char ids for a group of words in both layouts the encoders consume.
struct CharBatch {
  std::size_t count = 0;
  std::size_t word_length = kDefaultMaxWordLength;
  std::vector<int> padded;                    // [count x word_length], see pad_chars
  std::vector<std::vector<int>> sequences;    // unpadded ids per word
};

CharBatch make_char_batch(const std::vector<std::string>& forms, const Vocab& chars, std::size_t word_length,
                          bool lowercase = false);

namespace detail {

// Pad ids map to zero vectors rather than a learned row.
inline std::vector<std::int64_t> embedding_rows(const std::vector<int>& ids) {
  std::vector<std::int64_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) rows[i] = ids[i] == Vocab::kPad ? -1 : ids[i];
  return rows;
}

}  // namespace detail

// Feedforward char encoder: 11 embedded chars concatenated, two dense layers.
template <typename T>
struct CharFFParams {
  Parameter<T> char_embeddings;  // [chars x embed]
  Dense<T> layer1;               // (word_length * embed) -> hidden, relu
  Dense<T> layer2;               // hidden -> output
  double dropout = 0.15;
  std::size_t word_length = kDefaultMaxWordLength;

  CharFFParams() = default;
  CharFFParams(const FeatureConfig& cfg, std::size_t char_vocab, Rng& rng)
      : char_embeddings("char_encoder.ff.embeddings", Tensor<T>::matrix(char_vocab, cfg.char_embed_dim)),
        layer1("char_encoder.ff.layer1", cfg.max_word_length * cfg.char_embed_dim, cfg.char_ff_hidden,
               Activation::relu, rng),
        layer2("char_encoder.ff.layer2", cfg.char_ff_hidden, cfg.char_ff_output, cfg.char_ff_output_activation, rng),
        dropout(cfg.char_ff_dropout),
        word_length(cfg.max_word_length) {
    for (auto& v : char_embeddings.value.data()) v = T(rng.normal(0.0, 0.1));
  }

  std::size_t output_dim() const { return layer2.out_dim(); }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&char_embeddings);
    layer1.collect(refs);
    layer2.collect(refs);
  }
};

// ids: [count x word_length] padded char ids. Returns [count x output].
template <typename T>
Var<T> char_ff_encode(Graph<T>& g, const std::vector<int>& ids, std::size_t count, CharFFParams<T>& params, Mode mode,
                      Rng& rng) {
  if (ids.size() != count * params.word_length) {
    throw DimensionError("char_ff: expected " + std::to_string(count * params.word_length) + " char ids, got " +
                         std::to_string(ids.size()));
  }
  const std::size_t embed = params.char_embeddings.value.cols();
  const Var<T> chars = ops::gather_rows(g.param(params.char_embeddings), detail::embedding_rows(ids));
  const Var<T> flat = ops::reshape(chars, Shape{count, params.word_length * embed});
  const Var<T> hidden = ops::dropout(params.layer1.forward(g, flat), params.dropout, mode, rng);
  return params.layer2.forward(g, hidden);
}

template <typename T>
struct CharBiLstmParams {
  Parameter<T> char_embeddings;
  LstmParams<T> fwd;
  LstmParams<T> bwd;

  CharBiLstmParams() = default;
  CharBiLstmParams(const FeatureConfig& cfg, std::size_t char_vocab, Rng& rng)
      : char_embeddings("char_encoder.bilstm.embeddings", Tensor<T>::matrix(char_vocab, cfg.char_embed_dim)),
        fwd("char_encoder.bilstm.fwd", cfg.char_embed_dim, cfg.char_bilstm_hidden, rng),
        bwd("char_encoder.bilstm.bwd", cfg.char_embed_dim, cfg.char_bilstm_hidden, rng) {
    for (auto& v : char_embeddings.value.data()) v = T(rng.normal(0.0, 0.1));
  }

  std::size_t output_dim() const { return 2 * fwd.hidden(); }

  void collect(ParameterRefs<T>& refs) {
    refs.trainable.push_back(&char_embeddings);
    fwd.collect(refs);
    bwd.collect(refs);
  }
};

// Final forward state ++ final backward state for each word. [count x 2H]
template <typename T>
Var<T> char_bilstm_encode(Graph<T>& g, const std::vector<std::vector<int>>& words, CharBiLstmParams<T>& params) {
  const std::size_t count = words.size();
  std::size_t longest = 0;
  for (const auto& w : words) {
    if (w.empty()) throw DimensionError("char_bilstm: empty word");
    longest = std::max(longest, w.size());
  }
  if (count == 0) throw DimensionError("char_bilstm: no words");
  std::vector<std::int64_t> rows(longest * count, -1);
  std::vector<std::uint8_t> valid(longest * count, 0);
  for (std::size_t n = 0; n < count; ++n) {
    for (std::size_t t = 0; t < words[n].size(); ++t) {
      rows[t * count + n] = words[n][t] == Vocab::kPad ? -1 : words[n][t];
      valid[t * count + n] = 1;
    }
  }
  const Var<T> xs = ops::gather_rows(g.param(params.char_embeddings), rows);
  const bool ragged = std::find(valid.begin(), valid.end(), std::uint8_t{0}) != valid.end();
  const SequenceStates<T> states =
      bilstm_forward(g, xs, count, ragged ? valid : std::vector<std::uint8_t>{}, params.fwd, params.bwd);
  return ops::concat_cols(std::vector<Var<T>>{ops::slice_rows(states.fwd, (longest - 1) * count, count),
                                              ops::slice_rows(states.bwd, 0, count)});
}

// Either character encoder behind one interface.
template <typename T>
class CharEncoder {
 public:
  CharEncoder() = default;
  CharEncoder(const FeatureConfig& cfg, std::size_t char_vocab, Rng& rng) {
    if (cfg.use_char_ff) {
      ff_.emplace(cfg, char_vocab, rng);
    } else if (cfg.use_char_bilstm) {
      bilstm_.emplace(cfg, char_vocab, rng);
    } else {
      throw ConfigError("char encoder requested but no char feature enabled");
    }
  }

  bool is_ff() const { return ff_.has_value(); }
  std::size_t output_dim() const { return ff_ ? ff_->output_dim() : bilstm_->output_dim(); }
  std::size_t word_length() const { return ff_ ? ff_->word_length : kDefaultMaxWordLength; }

  Var<T> encode(Graph<T>& g, const CharBatch& batch, Mode mode, Rng& rng) {
    if (ff_) return char_ff_encode(g, batch.padded, batch.count, *ff_, mode, rng);
    return char_bilstm_encode(g, batch.sequences, *bilstm_);
  }

  void collect(ParameterRefs<T>& refs) {
    if (ff_) ff_->collect(refs);
    if (bilstm_) bilstm_->collect(refs);
  }

  CharFFParams<T>* ff() { return ff_ ? &*ff_ : nullptr; }
  CharBiLstmParams<T>* bilstm() { return bilstm_ ? &*bilstm_ : nullptr; }

 private:
  std::optional<CharFFParams<T>> ff_;
  std::optional<CharBiLstmParams<T>> bilstm_;
};

// relu(gv W^T + b): dense grammeme vector [N x G] -> [N x embed].
template <typename T>
Var<T> grammeme_embed(Graph<T>& g, const Var<T>& grammeme_vectors, Dense<T>& layer) {
  if (grammeme_vectors.cols() != layer.in_dim()) {
    throw DimensionError("grammeme_embed: vectors have " + std::to_string(grammeme_vectors.cols()) +
                         " slots, layer expects " + std::to_string(layer.in_dim()));
  }
  return layer.forward(g, grammeme_vectors);
}

template <typename T>
Var<T> word_embedding_lookup(Graph<T>& g, Parameter<T>& table, const std::vector<int>& word_ids) {
  std::vector<std::int64_t> rows(word_ids.begin(), word_ids.end());
  for (auto r : rows) {
    if (r < 0 || std::size_t(r) >= table.value.rows()) {
      throw DimensionError("word id " + std::to_string(r) + " outside embedding table of " +
                           std::to_string(table.value.rows()) + " rows");
    }
  }
  return ops::gather_rows(g.param(table), std::move(rows));
}

// Concatenates the enabled features (order: char, grammeme, word) and
// applies the projection layer.
template <typename T>
Var<T> compose_features(Graph<T>& g, const std::vector<Var<T>>& features, Dense<T>& projection) {
  if (features.empty()) throw ConfigError("compose_features: no features enabled");
  const Var<T> joined = features.size() == 1 ? features.front() : ops::concat_cols(features);
  return projection.forward(g, joined);
}

// Inputs for one group of N words.
struct WordFeatureInput {
  std::size_t count = 0;
  CharBatch chars;
  std::vector<double> grammemes;  // [count x grammeme_dim]
  std::vector<int> word_ids;
};

// All enabled word-level feature extractors plus the projection.
template <typename T>
class WordRepresentation {
 public:
  WordRepresentation() = default;
  WordRepresentation(const FeatureConfig& cfg, std::size_t char_vocab, std::size_t word_vocab,
                     std::size_t grammeme_dim, Rng& rng)
      : config_(cfg) {
    cfg.validate();
    std::size_t width = 0;
    if (cfg.uses_char_encoder()) {
      char_encoder_.emplace(cfg, char_vocab, rng);
      width += char_encoder_->output_dim();
    }
    if (cfg.use_grammemes) {
      if (grammeme_dim == 0) throw ConfigError("grammeme features need a non-empty lexicon");
      grammeme_layer_.emplace("grammeme_embed", grammeme_dim, cfg.grammeme_embed_dim, Activation::relu, rng);
      width += cfg.grammeme_embed_dim;
    }
    if (cfg.use_word_embedding) {
      word_embeddings_.emplace("word_embeddings", Tensor<T>::matrix(word_vocab, cfg.word_embed_dim));
      for (auto& v : word_embeddings_->value.data()) v = T(rng.normal(0.0, 0.1));
      word_embeddings_->frozen = !cfg.train_word_embeddings;
      width += cfg.word_embed_dim;
    }
    projection_ = Dense<T>("projection", width, cfg.projection_dim, cfg.projection_activation, rng);
  }

  const FeatureConfig& config() const { return config_; }
  std::size_t output_dim() const { return projection_.out_dim(); }

  // Copies pretrained vectors into the rows of matching vocabulary words.
  std::size_t init_word_embeddings(const EmbeddingTable& table, const Vocab& words) {
    if (!word_embeddings_) return 0;
    if (table.dim() != word_embeddings_->value.cols()) {
      throw ConfigError("embedding file has dim " + std::to_string(table.dim()) + " but word_embed_dim is " +
                        std::to_string(word_embeddings_->value.cols()));
    }
    std::size_t found = 0;
    for (std::size_t id = words.reserved(); id < words.size(); ++id) {
      const auto row = table.index(words.symbol(int(id)));
      if (!row) continue;
      const auto src = table.row(*row);
      for (std::size_t k = 0; k < src.size(); ++k) word_embeddings_->value.at(id, k) = T(src[k]);
      ++found;
    }
    return found;
  }

  Var<T> forward(Graph<T>& g, const WordFeatureInput& input, Mode mode, Rng& rng) {
    std::vector<Var<T>> parts;
    if (char_encoder_) parts.push_back(char_encoder_->encode(g, input.chars, mode, rng));
    if (grammeme_layer_) {
      const std::size_t gdim = grammeme_layer_->in_dim();
      if (input.grammemes.size() != input.count * gdim) throw DimensionError("grammeme input size mismatch");
      Tensor<T> gv(Shape{input.count, gdim}, std::vector<T>(input.grammemes.begin(), input.grammemes.end()));
      parts.push_back(grammeme_embed(g, g.constant(std::move(gv)), *grammeme_layer_));
    }
    if (word_embeddings_) parts.push_back(word_embedding_lookup(g, *word_embeddings_, input.word_ids));
    return compose_features(g, parts, projection_);
  }

  void collect(ParameterRefs<T>& refs) {
    if (char_encoder_) char_encoder_->collect(refs);
    if (grammeme_layer_) grammeme_layer_->collect(refs);
    if (word_embeddings_) refs.trainable.push_back(&*word_embeddings_);
    projection_.collect(refs);
  }

  CharEncoder<T>* char_encoder() { return char_encoder_ ? &*char_encoder_ : nullptr; }
  Dense<T>* grammeme_layer() { return grammeme_layer_ ? &*grammeme_layer_ : nullptr; }
  Parameter<T>* word_embeddings() { return word_embeddings_ ? &*word_embeddings_ : nullptr; }
  Dense<T>& projection() { return projection_; }

 private:
  FeatureConfig config_;
  std::optional<CharEncoder<T>> char_encoder_;
  std::optional<Dense<T>> grammeme_layer_;
  std::optional<Parameter<T>> word_embeddings_;
  Dense<T> projection_;
};

}  // namespace morphtag
