#include "morphtag/model_io.hpp"

namespace morphtag {

using nlohmann::json;

json vocab_to_json(const Vocab& vocab) { return vocab.entries(); }

Vocab vocab_from_json(const json& j, Vocab::Kind kind) {
  if (!j.is_array()) throw CheckpointError(CheckpointError::Kind::malformed, "vocabulary is not a JSON array");
  return Vocab::from_symbols(kind, j.get<std::vector<std::string>>());
}

json vocabs_to_json(const Vocabs& vocabs) {
  return {{"chars", vocab_to_json(vocabs.chars)},
          {"words", vocab_to_json(vocabs.words)},
          {"tags", vocab_to_json(vocabs.tags)}};
}

Vocabs vocabs_from_json(const json& j) {
  for (const char* key : {"chars", "words", "tags"}) {
    if (!j.contains(key)) detail::missing_metadata(std::string("vocabs.") + key);
  }
  Vocabs v;
  v.chars = vocab_from_json(j["chars"], Vocab::Kind::symbols);
  v.words = vocab_from_json(j["words"], Vocab::Kind::symbols);
  v.tags = vocab_from_json(j["tags"], Vocab::Kind::tags);
  return v;
}

json lexicon_index_json(const GrammemeLexicon& lexicon) {
  json out = json::array();
  for (const auto& c : lexicon.categories()) out.push_back({{"name", c.name}, {"values", c.values}});
  return out;
}

namespace detail {

void missing_metadata(const std::string& key) {
  throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint metadata lacks '" + key + "'");
}

}  // namespace detail

CharInit read_char_init(const std::string& path) {
  CharInit init;
  init.data = read_checkpoint(path);
  const auto& meta = init.data.metadata;
  if (meta.value("component", "") != "char_encoder") {
    throw CheckpointError(CheckpointError::Kind::malformed, path + ": not a char encoder checkpoint");
  }
  if (!meta.contains("features")) detail::missing_metadata("features");
  if (!meta.contains("chars")) detail::missing_metadata("chars");
  init.features = feature_config_from_json(meta["features"]);
  init.chars = vocab_from_json(meta["chars"], Vocab::Kind::symbols);
  return init;
}

void check_char_init_compatible(const FeatureConfig& saved, const FeatureConfig& wanted) {
  const bool same = saved.use_char_ff == wanted.use_char_ff && saved.use_char_bilstm == wanted.use_char_bilstm &&
                    saved.max_word_length == wanted.max_word_length &&
                    saved.char_embed_dim == wanted.char_embed_dim && saved.lowercase == wanted.lowercase &&
                    (saved.use_char_ff ? saved.char_ff_hidden == wanted.char_ff_hidden &&
                                             saved.char_ff_output == wanted.char_ff_output &&
                                             saved.char_ff_output_activation == wanted.char_ff_output_activation
                                       : saved.char_bilstm_hidden == wanted.char_bilstm_hidden);
  if (!same) throw ConfigError("pretrained char encoder does not match the configured char features");
}

}  // namespace morphtag
