#pragma once

// Sentence encoder (stacked BiLSTM over projected word features), the tag
// head (softmax or CRF) and the auxiliary language-model heads.

#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "morphtag/batch.hpp"
#include "morphtag/config.hpp"
#include "morphtag/crf.hpp"
#include "morphtag/layers.hpp"
#include "morphtag/lexicon.hpp"
#include "morphtag/pretrain.hpp"
#include "morphtag/representations.hpp"
#include "morphtag/vocab.hpp"

namespace morphtag {

// Row layouts of one batch. Packed rows list the real tokens sentence by
// sentence; time-major rows (t * S + s) are what the BiLSTM consumes.
struct Packing {
  std::size_t sentences = 0;
  std::size_t max_length = 0;
  std::size_t tokens = 0;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> offsets;
  std::vector<std::int64_t> time_to_packed;  // -1 at padding
  std::vector<std::int64_t> packed_to_time;
  std::vector<std::uint8_t> valid;           // time-major

  explicit Packing(const std::vector<std::size_t>& sentence_lengths);
};

template <typename T>
struct TaggerForward {
  Packing packing{{}};
  Var<T> features;  // [N x projection], before input dropout
  Var<T> fwd;       // top layer forward states [N x H]
  Var<T> bwd;       // top layer backward states [N x H]
  Var<T> concat;    // [N x 2H]
  Var<T> logits;    // [N x tag classes]
};

struct LossWeights {
  double pos = 0;
  double word = 0;
  double emb = 0;
};

template <typename T>
struct TaggerLosses {
  Var<T> total;
  Var<T> main;
  std::optional<Var<T>> pos;
  std::optional<Var<T>> word;
  std::optional<Var<T>> emb;
};

// main + λ_pos·pos + λ_word·word + λ_emb·emb. Terms with a zero weight are
// left out of the graph, so they cannot perturb the result.
template <typename T>
Var<T> total_loss(const Var<T>& main, const std::optional<Var<T>>& pos, const std::optional<Var<T>>& word,
                  const std::optional<Var<T>>& emb, const LossWeights& weights) {
  if (weights.pos < 0 || weights.word < 0 || weights.emb < 0) throw ConfigError("loss weights must be nonnegative");
  Var<T> total = main;
  const auto add = [&](const std::optional<Var<T>>& term, double w) {
    if (w == 0 || !term) return;
    if (term->value().size() != 1) throw DimensionError("total_loss: component loss is not a scalar");
    total = ops::axpy(total, *term, T(w));
  };
  add(pos, weights.pos);
  add(word, weights.word);
  add(emb, weights.emb);
  return total;
}

// Tag class c is tag-vocabulary id c + 3 (ids 0..2 are pad/bos/eos).
inline int tag_class(int tag_id) { return tag_id < 0 ? -1 : tag_id - int(Vocab::kEos) - 1; }
inline int tag_id_of_class(int cls) { return cls + int(Vocab::kEos) + 1; }

template <typename T>
class TaggerModel {
 public:
  TaggerModel() = default;

  // `lexicon` may be null when grammeme features are off.
  TaggerModel(const ModelConfig& config, Vocabs vocabs, std::shared_ptr<const GrammemeLexicon> lexicon, Rng& rng)
      : config_(config), vocabs_(std::move(vocabs)), lexicon_(std::move(lexicon)) {
    config_.validate();
    if (vocabs_.tags.size() <= vocabs_.tags.reserved()) throw ConfigError("tag vocabulary is empty");
    const FeatureConfig& fc = config_.features;
    std::size_t gdim = 0;
    if (fc.use_grammemes) {
      if (!lexicon_ || lexicon_->empty()) throw ConfigError("grammeme features need a lexicon");
      gdim = lexicon_->slot_count();
    }
    repr_ = WordRepresentation<T>(fc, vocabs_.chars.size(), vocabs_.words.size(), gdim, rng);
    const std::size_t h = config_.encoder_hidden;
    for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
      // Each direction stacks on its own direction only, so the top forward
      // states still see nothing to their right.
      const std::size_t in = l == 0 ? repr_.output_dim() : h;
      const std::string base = "encoder.layer" + std::to_string(l + 1);
      fwd_layers_.emplace_back(base + ".fwd", in, h, rng);
      bwd_layers_.emplace_back(base + ".bwd", in, h, rng);
    }
    const std::size_t k = tag_classes();
    pre_output_ = Dense<T>("tag_head.pre_output", 2 * h, config_.pre_output_dim, Activation::none, rng);
    bn_ = BatchNormState<T>("tag_head.bn", config_.pre_output_dim, config_.bn_momentum, config_.bn_epsilon);
    output_ = Dense<T>("tag_head.output", config_.pre_output_dim, k, Activation::none, rng);
    if (config_.use_crf) crf_.emplace(k, "crf");
    if (config_.pos_lm_head) {
      pos_fwd_.emplace("aux.pos_fwd", h, k + 2, Activation::none, rng);
      pos_bwd_.emplace("aux.pos_bwd", h, k + 2, Activation::none, rng);
    }
    if (config_.word_lm_head) {
      const std::size_t v = vocabs_.words.size() + 2;
      word_fwd_.emplace("aux.word_fwd", h, v, Activation::none, rng);
      word_bwd_.emplace("aux.word_bwd", h, v, Activation::none, rng);
    }
  }

  const ModelConfig& config() const { return config_; }
  const Vocabs& vocabs() const { return vocabs_; }
  const std::shared_ptr<const GrammemeLexicon>& lexicon() const { return lexicon_; }
  std::size_t tag_classes() const { return vocabs_.tags.size() - vocabs_.tags.reserved(); }

  WordRepresentation<T>& representation() { return repr_; }
  BatchNormState<T>& batch_norm_state() { return bn_; }
  CrfParams<T>* crf() { return crf_ ? &*crf_ : nullptr; }

  // Training-only head for the char-embedding auxiliary loss; not saved.
  void attach_embedding_head(PretrainHead<T> head) { emb_head_ = std::move(head); }
  PretrainHead<T>* embedding_head() { return emb_head_ ? &*emb_head_ : nullptr; }

  // Every saved tensor: trainable parameters, then batch-norm statistics.
  ParameterRefs<T> parameters() {
    ParameterRefs<T> refs;
    repr_.collect(refs);
    for (std::size_t l = 0; l < fwd_layers_.size(); ++l) {
      fwd_layers_[l].collect(refs);
      bwd_layers_[l].collect(refs);
    }
    pre_output_.collect(refs);
    bn_.collect(refs);
    output_.collect(refs);
    if (crf_) crf_->collect(refs);
    for (auto* head : {&pos_fwd_, &pos_bwd_, &word_fwd_, &word_bwd_}) {
      if (*head) (*head)->collect(refs);
    }
    return refs;
  }

  // parameters() plus the embedding head, if attached.
  std::vector<Parameter<T>*> trainable_parameters() {
    std::vector<Parameter<T>*> out = parameters().trainable;
    if (emb_head_) {
      ParameterRefs<T> refs;
      emb_head_->collect(refs);
      out.insert(out.end(), refs.trainable.begin(), refs.trainable.end());
    }
    return out;
  }

  Parameter<T>* find_parameter(const std::string& name) {
    for (auto* p : parameters().all()) {
      if (p->name == name) return p;
    }
    return nullptr;
  }

  BatchOptions batch_options(std::size_t batch_size) const {
    return {batch_size, config_.features.max_word_length, config_.features.lowercase};
  }

  std::vector<Batch> make_batches(const Corpus& corpus, std::size_t batch_size, Rng* rng = nullptr) const {
    const GrammemeLexicon* lex = config_.features.use_grammemes ? lexicon_.get() : nullptr;
    return batch_sentences(corpus, vocabs_, lex, batch_options(batch_size), rng);
  }

  WordFeatureInput word_inputs(const Batch& batch) const {
    WordFeatureInput in;
    in.chars.word_length = batch.word_length;
    for (std::size_t s = 0; s < batch.sentences; ++s) {
      for (std::size_t t = 0; t < batch.lengths[s]; ++t) {
        const std::size_t cell = batch.at(s, t);
        ++in.count;
        in.chars.padded.insert(in.chars.padded.end(),
                               batch.char_id_matrix.begin() + std::ptrdiff_t(cell * batch.word_length),
                               batch.char_id_matrix.begin() + std::ptrdiff_t((cell + 1) * batch.word_length));
        in.chars.sequences.push_back(batch.char_sequences[cell]);
        in.grammemes.insert(in.grammemes.end(),
                            batch.grammeme_vectors.begin() + std::ptrdiff_t(cell * batch.grammeme_dim),
                            batch.grammeme_vectors.begin() + std::ptrdiff_t((cell + 1) * batch.grammeme_dim));
        in.word_ids.push_back(batch.word_ids[cell]);
      }
    }
    in.chars.count = in.count;
    return in;
  }

  TaggerForward<T> forward(Graph<T>& g, const Batch& batch, Mode mode, Rng& rng) {
    if (batch.tokens() == 0) throw DimensionError("tagger: batch without tokens");
    const Var<T> features = repr_.forward(g, word_inputs(batch), mode, rng);
    return forward_features(g, features, batch.lengths, mode, rng);
  }

  // Everything after the word representation. `features` holds the packed
  // projected features of sentences with the given lengths.
  TaggerForward<T> forward_features(Graph<T>& g, const Var<T>& features, const std::vector<std::size_t>& lengths,
                                    Mode mode, Rng& rng) {
    TaggerForward<T> out;
    out.packing = Packing(lengths);
    const Packing& p = out.packing;
    if (p.tokens == 0) throw DimensionError("tagger: empty sentence");
    if (features.rows() != p.tokens) throw DimensionError("tagger: feature rows do not match sentence lengths");
    out.features = features;
    Var<T> x = ops::gather_rows(ops::dropout(features, config_.dropout, mode, rng), p.time_to_packed);
    const bool ragged = std::find(p.valid.begin(), p.valid.end(), std::uint8_t{0}) != p.valid.end();
    const std::vector<std::uint8_t> valid = ragged ? p.valid : std::vector<std::uint8_t>{};
    SequenceStates<T> states = bilstm_forward(g, x, p.sentences, valid, fwd_layers_[0], bwd_layers_[0]);
    for (std::size_t l = 1; l < fwd_layers_.size(); ++l) {
      const Var<T> xf = ops::dropout(states.fwd, config_.dropout, mode, rng);
      const Var<T> xb = ops::dropout(states.bwd, config_.dropout, mode, rng);
      states = bilstm_forward(g, xf, xb, p.sentences, valid, fwd_layers_[l], bwd_layers_[l]);
    }
    out.fwd = ops::gather_rows(states.fwd, p.packed_to_time);
    out.bwd = ops::gather_rows(states.bwd, p.packed_to_time);
    out.concat = ops::concat_cols(std::vector<Var<T>>{out.fwd, out.bwd});
    out.logits = tag_logits(g, out.concat, mode);
    return out;
  }

  // Batch statistics come from the packed (real) tokens only. A frozen
  // batch norm keeps its running statistics; a single-token batch in train
  // mode is normalised with them as well.
  Var<T> tag_logits(Graph<T>& g, const Var<T>& concat, Mode mode) {
    const Var<T> pre = pre_output_.forward(g, concat);
    const Mode bn_mode = mode == Mode::train && concat.rows() >= 2 ? Mode::train : Mode::eval;
    const Var<T> normed = batch_norm(g, pre, bn_, bn_mode, !bn_.gamma.frozen);
    return output_.forward(g, ops::relu(normed));
  }

  std::vector<int> gold_classes(const Batch& batch) const {
    std::vector<int> gold;
    for (std::size_t s = 0; s < batch.sentences; ++s) {
      for (std::size_t t = 0; t < batch.lengths[s]; ++t) {
        const int id = batch.tag_ids[batch.at(s, t)];
        if (id < 0) {
          throw LookupError("tag of '" + batch.forms[batch.at(s, t)] + "' is not in the model's tag vocabulary");
        }
        gold.push_back(tag_class(id));
      }
    }
    return gold;
  }

  // Softmax: mean token cross-entropy. CRF: summed sentence NLL over tokens.
  Var<T> main_loss(Graph<T>& g, const TaggerForward<T>& fw, const std::vector<int>& gold) {
    if (!crf_) return ops::softmax_cross_entropy(fw.logits, gold).loss;
    const Packing& p = fw.packing;
    const Var<T> trans = g.param(crf_->transitions), start = g.param(crf_->start_scores),
                 end = g.param(crf_->end_scores);
    std::vector<Var<T>> nll;
    for (std::size_t s = 0; s < p.sentences; ++s) {
      if (p.lengths[s] == 0) continue;
      const std::vector<int> path(gold.begin() + std::ptrdiff_t(p.offsets[s]),
                                  gold.begin() + std::ptrdiff_t(p.offsets[s] + p.lengths[s]));
      nll.push_back(crf_log_likelihood(ops::slice_rows(fw.logits, p.offsets[s], p.lengths[s]), path, trans, start,
                                       end));
    }
    const Var<T> stacked = nll.size() == 1 ? nll.front() : ops::concat_rows(reshape_scalars(nll));
    return ops::scale(ops::sum(stacked), T(1) / T(p.tokens));
  }

  // Forward head at t predicts the class at t+1 (eos past the end), the
  // backward head the class at t-1 (bos before the start).
  static std::pair<std::vector<int>, std::vector<int>> shifted_targets(const Packing& p, const std::vector<int>& ids,
                                                                       int bos, int eos) {
    std::vector<int> next(p.tokens), prev(p.tokens);
    for (std::size_t s = 0; s < p.sentences; ++s) {
      for (std::size_t t = 0; t < p.lengths[s]; ++t) {
        const std::size_t i = p.offsets[s] + t;
        next[i] = t + 1 < p.lengths[s] ? ids[i + 1] : eos;
        prev[i] = t > 0 ? ids[i - 1] : bos;
      }
    }
    return {std::move(next), std::move(prev)};
  }

  std::pair<Var<T>, Var<T>> pos_lm_logits(Graph<T>& g, const TaggerForward<T>& fw) {
    if (!pos_fwd_) throw ConfigError("model has no POS-LM head");
    return {pos_fwd_->forward(g, fw.fwd), pos_bwd_->forward(g, fw.bwd)};
  }

  std::pair<Var<T>, Var<T>> word_lm_logits(Graph<T>& g, const TaggerForward<T>& fw) {
    if (!word_fwd_) throw ConfigError("model has no word-LM head");
    return {word_fwd_->forward(g, fw.fwd), word_bwd_->forward(g, fw.bwd)};
  }

  // Mean of the forward and backward cross-entropies.
  Var<T> pos_lm_loss(Graph<T>& g, const TaggerForward<T>& fw, const std::vector<int>& gold) {
    const int k = int(tag_classes());
    const auto [next, prev] = shifted_targets(fw.packing, gold, k, k + 1);
    const auto [lf, lb] = pos_lm_logits(g, fw);
    return ops::scale(ops::add(ops::softmax_cross_entropy(lf, next).loss, ops::softmax_cross_entropy(lb, prev).loss),
                      T(0.5));
  }

  Var<T> word_lm_loss(Graph<T>& g, const TaggerForward<T>& fw, const Batch& batch) {
    std::vector<int> ids;
    for (std::size_t s = 0; s < batch.sentences; ++s) {
      for (std::size_t t = 0; t < batch.lengths[s]; ++t) ids.push_back(batch.word_ids[batch.at(s, t)]);
    }
    const int v = int(vocabs_.words.size());
    const auto [next, prev] = shifted_targets(fw.packing, ids, v, v + 1);
    const auto [lf, lb] = word_lm_logits(g, fw);
    return ops::scale(ops::add(ops::softmax_cross_entropy(lf, next).loss, ops::softmax_cross_entropy(lb, prev).loss),
                      T(0.5));
  }

  // Char-embedding objective over the batch tokens present in the attached
  // head's vocabulary; nullopt when none are.
  std::optional<Var<T>> embedding_loss(Graph<T>& g, const Batch& batch, Mode mode, Rng& rng) {
    if (!emb_head_ || !repr_.char_encoder()) throw ConfigError("embedding loss needs a char encoder and a head");
    const bool lower = config_.features.lowercase;
    std::vector<std::string> words;
    for (std::size_t s = 0; s < batch.sentences; ++s) {
      for (std::size_t t = 0; t < batch.lengths[s]; ++t) {
        const std::string& form = batch.forms[batch.at(s, t)];
        if (emb_head_->find(lower ? lowercase_utf8(form) : form)) words.push_back(lower ? lowercase_utf8(form) : form);
      }
    }
    if (words.empty()) return std::nullopt;
    return char_embedding_aux_loss(g, *repr_.char_encoder(), *emb_head_, words, vocabs_.chars, mode, rng, lower);
  }

  TaggerLosses<T> losses(Graph<T>& g, const TaggerForward<T>& fw, const Batch& batch, const LossWeights& weights,
                         Mode mode, Rng& rng) {
    const std::vector<int> gold = gold_classes(batch);
    TaggerLosses<T> out;
    out.main = main_loss(g, fw, gold);
    if (weights.pos != 0 && pos_fwd_) out.pos = pos_lm_loss(g, fw, gold);
    if (weights.word != 0 && word_fwd_) out.word = word_lm_loss(g, fw, batch);
    if (weights.emb != 0 && emb_head_) out.emb = embedding_loss(g, batch, mode, rng);
    out.total = total_loss(out.main, out.pos, out.word, out.emb, weights);
    return out;
  }

  // Class ids per sentence of the batch: argmax per token (ties to the lower
  // id) or the Viterbi path.
  std::vector<std::vector<int>> decode_logits(const TaggerForward<T>& fw) {
    const Packing& p = fw.packing;
    const Tensor<T>& logits = fw.logits.value();
    std::vector<std::vector<int>> out(p.sentences);
    for (std::size_t s = 0; s < p.sentences; ++s) {
      if (p.lengths[s] == 0) continue;
      if (crf_) {
        Tensor<T> em = Tensor<T>::matrix(p.lengths[s], logits.cols());
        em.mat() = logits.mat().middleRows(Eigen::Index(p.offsets[s]), Eigen::Index(p.lengths[s]));
        out[s] = crf_viterbi(em, crf_->transitions.value, crf_->start_scores.value, crf_->end_scores.value).path;
        continue;
      }
      for (std::size_t t = 0; t < p.lengths[s]; ++t) {
        const std::size_t r = p.offsets[s] + t;
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
          if (logits.at(r, c) > logits.at(r, best)) best = c;
        }
        out[s].push_back(int(best));
      }
    }
    return out;
  }

  // Eval-mode prediction. Reads parameters only, so concurrent calls on a
  // model that is not being trained are safe.
  std::vector<std::vector<int>> predict(const Batch& batch) {
    if (batch.tokens() == 0) return std::vector<std::vector<int>>(batch.sentences);
    Graph<T> g(false);
    Rng unused(0);
    return decode_logits(forward(g, batch, Mode::eval, unused));
  }

  // Class ids for every sentence in corpus order. Batches are fanned out
  // over `threads` workers; the result does not depend on the thread count.
  std::vector<std::vector<int>> predict_corpus(const Corpus& corpus, std::size_t batch_size,
                                               std::size_t threads = 1) {
    const std::vector<Batch> batches = make_batches(corpus, batch_size);
    std::vector<std::vector<int>> out(corpus.size());
    const auto run = [&](std::size_t b) {
      auto ids = predict(batches[b]);
      for (std::size_t s = 0; s < batches[b].sentences; ++s) out[batches[b].source_index[s]] = std::move(ids[s]);
    };
    threads = std::max<std::size_t>(1, std::min(threads, batches.size()));
    if (threads == 1) {
      for (std::size_t b = 0; b < batches.size(); ++b) run(b);
      return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < batches.size(); b = next++) {
          try {
            run(b);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
  }

  std::vector<std::vector<std::string>> tag_corpus(const Corpus& corpus, std::size_t batch_size,
                                                   std::size_t threads = 1) {
    const auto ids = predict_corpus(corpus, batch_size, threads);
    std::vector<std::vector<std::string>> out(ids.size());
    for (std::size_t s = 0; s < ids.size(); ++s) {
      for (int c : ids[s]) out[s].push_back(vocabs_.tags.symbol(tag_id_of_class(c)));
    }
    return out;
  }

 private:
  static std::vector<Var<T>> reshape_scalars(const std::vector<Var<T>>& xs) {
    std::vector<Var<T>> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(ops::reshape(x, Shape{1, 1}));
    return out;
  }

  ModelConfig config_;
  Vocabs vocabs_;
  std::shared_ptr<const GrammemeLexicon> lexicon_;
  WordRepresentation<T> repr_;
  std::vector<LstmParams<T>> fwd_layers_;
  std::vector<LstmParams<T>> bwd_layers_;
  Dense<T> pre_output_;
  BatchNormState<T> bn_;
  Dense<T> output_;
  std::optional<CrfParams<T>> crf_;
  std::optional<Dense<T>> pos_fwd_;
  std::optional<Dense<T>> pos_bwd_;
  std::optional<Dense<T>> word_fwd_;
  std::optional<Dense<T>> word_bwd_;
  std::optional<PretrainHead<T>> emb_head_;
};

extern template class TaggerModel<float>;
extern template class TaggerModel<double>;

}  // namespace morphtag
