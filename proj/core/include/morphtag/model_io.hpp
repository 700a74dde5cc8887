#pragma once

// Tagger and char-encoder checkpoints on top of the container format.

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "morphtag/checkpoint.hpp"
#include "morphtag/pretrain.hpp"
#include "morphtag/tagger.hpp"

namespace morphtag {

nlohmann::json vocab_to_json(const Vocab& vocab);
Vocab vocab_from_json(const nlohmann::json& j, Vocab::Kind kind);
nlohmann::json vocabs_to_json(const Vocabs& vocabs);
Vocabs vocabs_from_json(const nlohmann::json& j);

// [{"name": ..., "values": [...]}, ...] as in GrammemeLexicon::categories().
nlohmann::json lexicon_index_json(const GrammemeLexicon& lexicon);

namespace detail {

[[noreturn]] void missing_metadata(const std::string& key);

template <typename T>
void load_tensors(const CheckpointData& data, const std::vector<Parameter<T>*>& params, const std::string& prefix) {
  std::size_t matched = 0;
  for (auto* p : params) {
    const TensorRecord* r = data.find(p->name);
    if (!r) throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint lacks tensor '" + p->name + "'");
    assign_record(*r, *p);
    ++matched;
  }
  std::size_t expected = 0;
  for (const auto& t : data.tensors) expected += t.name.rfind(prefix, 0) == 0 ? 1 : 0;
  if (matched != expected) {
    throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint holds tensors the model does not have");
  }
}

}  // namespace detail

// Metadata: component, scalar type, model config, vocabularies, lexicon
// category index, plus every key of `extra` (training config, lexicon
// path, metrics history).
template <typename T>
CheckpointData tagger_checkpoint(TaggerModel<T>& model, const nlohmann::json& extra = nlohmann::json::object()) {
  CheckpointData data;
  data.metadata = extra.is_object() ? extra : nlohmann::json::object();
  data.metadata["component"] = "tagger";
  data.metadata["scalar"] = dtype_of<T>() == DType::f32 ? "f32" : "f64";
  data.metadata["model_config"] = to_json(model.config());
  data.metadata["vocabs"] = vocabs_to_json(model.vocabs());
  if (model.config().features.use_grammemes && model.lexicon()) {
    data.metadata["lexicon_index"] = lexicon_index_json(*model.lexicon());
  }
  for (auto* p : model.parameters().all()) data.tensors.push_back(to_record(*p));
  return data;
}

template <typename T>
void save_tagger(const std::string& path, TaggerModel<T>& model, const nlohmann::json& extra = nlohmann::json::object()) {
  write_checkpoint(path, tagger_checkpoint(model, extra));
}

// Rebuilds the model from metadata and fills every tensor. The lexicon is
// the given one, else the file at `lexicon_path` from the metadata; its
// category index must match the saved one.
template <typename T>
TaggerModel<T> tagger_from_checkpoint(const CheckpointData& data,
                                      std::shared_ptr<const GrammemeLexicon> lexicon = nullptr) {
  const auto& meta = data.metadata;
  if (meta.value("component", "") != "tagger") {
    throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint does not hold a tagger");
  }
  if (!meta.contains("model_config")) detail::missing_metadata("model_config");
  if (!meta.contains("vocabs")) detail::missing_metadata("vocabs");
  const ModelConfig config = model_config_from_json(meta["model_config"]);
  if (config.features.use_grammemes) {
    if (!lexicon) {
      const std::string path = meta.value("lexicon_path", "");
      if (path.empty()) throw ConfigError("checkpoint uses grammeme features but names no lexicon file");
      lexicon = std::make_shared<const GrammemeLexicon>(read_grammeme_lexicon(path));
    }
    if (meta.contains("lexicon_index") && meta["lexicon_index"] != lexicon_index_json(*lexicon)) {
      throw ConfigError("lexicon categories differ from the ones the model was trained with");
    }
  }
  Rng unused(0);
  TaggerModel<T> model(config, vocabs_from_json(meta["vocabs"]), std::move(lexicon), unused);
  detail::load_tensors(data, model.parameters().all(), "");
  return model;
}

template <typename T>
TaggerModel<T> load_tagger(const std::string& path, std::shared_ptr<const GrammemeLexicon> lexicon = nullptr) {
  return tagger_from_checkpoint<T>(read_checkpoint(path), std::move(lexicon));
}

// Pretrained char encoder with its head, component "char_encoder".
template <typename T>
CheckpointData char_encoder_checkpoint(CharEncoder<T>& encoder, PretrainHead<T>& head, const Vocab& chars,
                                       const FeatureConfig& features,
                                       const nlohmann::json& extra = nlohmann::json::object()) {
  CheckpointData data;
  data.metadata = extra.is_object() ? extra : nlohmann::json::object();
  data.metadata["component"] = "char_encoder";
  data.metadata["features"] = to_json(features);
  data.metadata["chars"] = vocab_to_json(chars);
  data.metadata["pretrain_words"] = head.words();
  ParameterRefs<T> refs;
  encoder.collect(refs);
  head.collect(refs);
  for (auto* p : refs.all()) data.tensors.push_back(to_record(*p));
  return data;
}

struct CharInit {
  FeatureConfig features;
  Vocab chars;
  CheckpointData data;
};

CharInit read_char_init(const std::string& path);

// Throws ConfigError unless `wanted` builds the same char encoder.
void check_char_init_compatible(const FeatureConfig& saved, const FeatureConfig& wanted);

template <typename T>
void apply_char_init(const CharInit& init, CharEncoder<T>& encoder) {
  ParameterRefs<T> refs;
  encoder.collect(refs);
  detail::load_tensors(init.data, refs.all(), "char_encoder.");
}

}  // namespace morphtag
