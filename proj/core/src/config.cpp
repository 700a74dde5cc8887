#include "morphtag/config.hpp"

#include <set>

#include "morphtag/error.hpp"

namespace morphtag {

using nlohmann::json;

namespace {

template <typename F>
void visit(FeatureConfig& c, F&& f) {
  f("use_char_ff", c.use_char_ff);
  f("use_char_bilstm", c.use_char_bilstm);
  f("use_grammemes", c.use_grammemes);
  f("use_word_embedding", c.use_word_embedding);
  f("max_word_length", c.max_word_length);
  f("char_embed_dim", c.char_embed_dim);
  f("char_ff_hidden", c.char_ff_hidden);
  f("char_ff_output", c.char_ff_output);
  f("char_ff_dropout", c.char_ff_dropout);
  f("char_ff_output_activation", c.char_ff_output_activation);
  f("char_bilstm_hidden", c.char_bilstm_hidden);
  f("grammeme_embed_dim", c.grammeme_embed_dim);
  f("word_embed_dim", c.word_embed_dim);
  f("train_word_embeddings", c.train_word_embeddings);
  f("projection_dim", c.projection_dim);
  f("projection_activation", c.projection_activation);
  f("lowercase", c.lowercase);
}

template <typename F>
void visit(ModelConfig& c, F&& f) {
  visit(c.features, f);
  f("encoder_layers", c.encoder_layers);
  f("encoder_hidden", c.encoder_hidden);
  f("dropout", c.dropout);
  f("pre_output_dim", c.pre_output_dim);
  f("bn_momentum", c.bn_momentum);
  f("bn_epsilon", c.bn_epsilon);
  f("use_crf", c.use_crf);
  f("pos_lm_head", c.pos_lm_head);
  f("word_lm_head", c.word_lm_head);
}

template <typename F>
void visit(TrainConfig& c, F&& f) {
  visit(c.model, f);
  f("learning_rate", c.optimizer.learning_rate);
  f("beta1", c.optimizer.beta1);
  f("beta2", c.optimizer.beta2);
  f("adam_epsilon", c.optimizer.epsilon);
  f("batch_size", c.batch_size);
  f("max_epochs", c.max_epochs);
  f("patience", c.patience);
  f("seed", c.seed);
  f("lambda_pos", c.lambda_pos);
  f("lambda_word", c.lambda_word);
  f("lambda_emb", c.lambda_emb);
  f("clip_norm", c.clip_norm);
  f("freeze_epochs", c.freeze_epochs);
  f("unfreeze_lr_multiplier", c.unfreeze_lr_multiplier);
  f("min_word_freq", c.min_word_freq);
  f("max_word_vocab", c.max_word_vocab);
  f("threads", c.threads);
  f("lexicon_path", c.lexicon_path);
  f("embeddings_path", c.embeddings_path);
  f("char_init_path", c.char_init_path);
  f("tag_filter_path", c.tag_filter_path);
}

template <typename F>
void visit(PretrainConfig& c, F&& f) {
  visit(c.features, f);
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("learning_rate", c.learning_rate);
  f("output_frozen", c.output_frozen);
  f("use_all_embedding_words", c.use_all_embedding_words);
  f("seed", c.seed);
}

struct Writer {
  json& out;
  template <typename V>
  void operator()(const char* key, const V& value) {
    if constexpr (std::is_same_v<V, Activation>) {
      out[key] = activation_name(value);
    } else {
      out[key] = value;
    }
  }
};

struct Reader {
  const json& in;
  std::set<std::string> known;
  template <typename V>
  void operator()(const char* key, V& value) {
    known.insert(key);
    const auto it = in.find(key);
    if (it == in.end()) return;
    try {
      if constexpr (std::is_same_v<V, Activation>) {
        value = parse_activation(it->template get<std::string>());
      } else if constexpr (std::is_same_v<V, std::size_t> || std::is_same_v<V, std::uint64_t>) {
        if (!it->is_number_unsigned()) throw ConfigError("expected a nonnegative integer");
        value = it->template get<V>();
      } else {
        value = it->template get<V>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }

  void reject_unknown() const {
    if (!in.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : in.items()) {
      if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }
};

template <typename C>
json write(const C& c) {
  json j = json::object();
  visit(const_cast<C&>(c), Writer{j});
  return j;
}

template <typename C>
C read(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  C c;
  Reader reader{j, {}};
  visit(c, reader);
  reader.reject_unknown();
  c.validate();
  return c;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void FeatureConfig::validate() const {
  check(use_char_ff || use_char_bilstm || use_grammemes || use_word_embedding,
        "at least one word feature must be enabled");
  check(!(use_char_ff && use_char_bilstm), "use_char_ff and use_char_bilstm are mutually exclusive");
  check(max_word_length > 0 && char_embed_dim > 0 && char_ff_hidden > 0 && char_ff_output > 0 &&
            char_bilstm_hidden > 0 && grammeme_embed_dim > 0 && word_embed_dim > 0 && projection_dim > 0,
        "feature dimensions must be positive");
  check(char_ff_dropout >= 0 && char_ff_dropout < 1, "char_ff_dropout must be in [0, 1)");
}

void ModelConfig::validate() const {
  features.validate();
  check(encoder_layers >= 1 && encoder_hidden > 0 && pre_output_dim > 0, "encoder dimensions must be positive");
  check(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
  check(bn_momentum >= 0 && bn_momentum < 1, "bn_momentum must be in [0, 1)");
  check(bn_epsilon > 0, "bn_epsilon must be positive");
}

void TrainConfig::validate() const {
  model.validate();
  check(optimizer.learning_rate > 0, "learning_rate must be positive");
  check(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 && optimizer.beta2 < 1,
        "Adam betas must be in [0, 1)");
  check(optimizer.epsilon > 0, "adam_epsilon must be positive");
  check(batch_size >= 1, "batch_size must be at least 1");
  check(patience >= 1, "patience must be at least 1");
  check(lambda_pos >= 0 && lambda_word >= 0 && lambda_emb >= 0, "loss weights must be nonnegative");
  check(clip_norm >= 0, "clip_norm must be nonnegative");
  check(unfreeze_lr_multiplier > 0, "unfreeze_lr_multiplier must be positive");
  check(threads >= 1, "threads must be at least 1");
}

void PretrainConfig::validate() const {
  features.validate();
  check(features.uses_char_encoder(), "pretraining needs a character encoder");
  check(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be at least 1");
  check(learning_rate > 0, "learning_rate must be positive");
}

json to_json(const FeatureConfig& c) { return write(c); }
json to_json(const ModelConfig& c) { return write(c); }
json to_json(const TrainConfig& c) { return write(c); }
json to_json(const PretrainConfig& c) { return write(c); }

FeatureConfig feature_config_from_json(const json& j) { return read<FeatureConfig>(j); }
ModelConfig model_config_from_json(const json& j) { return read<ModelConfig>(j); }
TrainConfig train_config_from_json(const json& j) { return read<TrainConfig>(j); }
PretrainConfig pretrain_config_from_json(const json& j) { return read<PretrainConfig>(j); }

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[key] = value;
}

}  // namespace morphtag
