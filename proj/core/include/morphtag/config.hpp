#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "morphtag/features.hpp"
#include "morphtag/ops.hpp"
#include "morphtag/optim.hpp"

namespace morphtag {

// Which per-word features feed the projection layer, and their sizes.
struct FeatureConfig {
  bool use_char_ff = true;
  bool use_char_bilstm = false;
  bool use_grammemes = false;
  bool use_word_embedding = false;

  std::size_t max_word_length = kDefaultMaxWordLength;
  std::size_t char_embed_dim = 24;
  std::size_t char_ff_hidden = 500;
  std::size_t char_ff_output = 200;
  double char_ff_dropout = 0.15;
  Activation char_ff_output_activation = Activation::relu;
  std::size_t char_bilstm_hidden = 150;
  std::size_t grammeme_embed_dim = 64;
  std::size_t word_embed_dim = 100;
  bool train_word_embeddings = true;
  std::size_t projection_dim = 200;
  Activation projection_activation = Activation::none;
  bool lowercase = false;

  bool uses_char_encoder() const { return use_char_ff || use_char_bilstm; }
  void validate() const;
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct ModelConfig {
  FeatureConfig features;
  std::size_t encoder_layers = 2;
  std::size_t encoder_hidden = 128;
  double dropout = 0.3;
  std::size_t pre_output_dim = 100;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  bool use_crf = false;
  bool pos_lm_head = true;
  bool word_lm_head = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  ModelConfig model;
  AdamConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  double lambda_pos = 0.1;
  double lambda_word = 0.1;
  double lambda_emb = 0.0;
  double clip_norm = 5.0;
  std::size_t freeze_epochs = 5;
  double unfreeze_lr_multiplier = 1.0;
  std::size_t min_word_freq = 1;
  std::size_t max_word_vocab = 10000;
  std::size_t threads = 1;
  std::string lexicon_path;
  std::string embeddings_path;
  std::string char_init_path;
  std::string tag_filter_path;

  void validate() const;
};

struct PretrainConfig {
  FeatureConfig features;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  bool output_frozen = true;
  bool use_all_embedding_words = false;
  std::uint64_t seed = 1;

  void validate() const;
};

// Flat JSON objects; every field of the structs above is a top-level key
// (see docs/config.md). Unknown keys are rejected with ConfigError.
nlohmann::json to_json(const FeatureConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const PretrainConfig& c);

FeatureConfig feature_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
PretrainConfig pretrain_config_from_json(const nlohmann::json& j);

// Applies "key=value" with value parsed as JSON (bare strings allowed).
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace morphtag
