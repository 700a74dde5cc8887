#include "morphtag/trainer.hpp"

#include <sstream>

namespace morphtag {

using nlohmann::json;

json to_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch}, {"train_loss", m.train_loss}, {"train_acc", m.train_acc}, {"dev_acc", m.dev_acc}};
}

json MetricsReport::to_json() const {
  json j;
  j["epochs"] = json::array();
  for (const auto& e : epochs) j["epochs"].push_back(morphtag::to_json(e));
  j["best_epoch"] = best_epoch;
  j["best_dev_acc"] = best_dev_acc;
  j["train_tokens"] = train_tokens;
  j["dev_tokens"] = dev_tokens;
  if (test_acc) {
    j["test_acc"] = *test_acc;
    j["test_tokens"] = test_tokens;
  }
  return j;
}

std::string MetricsReport::jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    out += morphtag::to_json(e).dump();
    out += '\n';
  }
  return out;
}

TrainingResources load_resources(const Corpus& train, const TrainConfig& cfg) {
  const FeatureConfig& fc = cfg.model.features;
  TrainingResources res;
  res.vocabs = build_vocabs(train, {cfg.min_word_freq, cfg.max_word_vocab, fc.lowercase});
  if (fc.use_grammemes) {
    if (cfg.lexicon_path.empty()) throw ConfigError("use_grammemes needs lexicon_path");
    res.lexicon = std::make_shared<const GrammemeLexicon>(read_grammeme_lexicon(cfg.lexicon_path));
  }
  if (!cfg.embeddings_path.empty() && (fc.use_word_embedding || cfg.lambda_emb > 0)) {
    res.embeddings = read_embeddings_text(cfg.embeddings_path);
  }
  if (!cfg.char_init_path.empty()) {
    if (!fc.uses_char_encoder()) throw ConfigError("char_init_path given but no char encoder is enabled");
    res.char_init = read_char_init(cfg.char_init_path);
    check_char_init_compatible(res.char_init->features, fc);
    res.vocabs.chars = res.char_init->chars;
  }
  return res;
}

std::vector<std::string> parse_tag_filter(std::string_view text) {
  std::vector<std::string> categories;
  for (auto line : split(text, '\n')) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    categories.emplace_back(line);
  }
  return categories;
}

std::vector<std::string> read_tag_filter(const std::string& path) { return parse_tag_filter(read_file(path)); }

double tag_accuracy(const Corpus& gold, const std::vector<std::vector<std::string>>& predicted,
                    const std::vector<std::string>* tag_filter, std::size_t* correct_out, std::size_t* total_out) {
  if (predicted.size() != gold.size()) throw DimensionError("accuracy: sentence count mismatch");
  std::size_t correct = 0, total = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size()) throw DimensionError("accuracy: sentence length mismatch");
    for (std::size_t t = 0; t < gold[s].size(); ++t) {
      const std::string& g = gold[s].tokens[t].tag;
      const std::string& p = predicted[s][t];
      const bool match = tag_filter ? project_tag(g, *tag_filter) == project_tag(p, *tag_filter) : g == p;
      correct += match ? 1 : 0;
      ++total;
    }
  }
  if (correct_out) *correct_out = correct;
  if (total_out) *total_out = total;
  return total ? double(correct) / double(total) : 0.0;
}

void check_training_data(const Corpus& train, const Corpus& dev) {
  if (count_tokens(train) == 0) throw DataError("training corpus has no tokens");
  if (count_tokens(dev) == 0) throw DataError("dev corpus has no tokens");
}

bool is_tagset_specific(const std::string& name) {
  return name.rfind("tag_head.output.", 0) == 0 || name.rfind("aux.pos_", 0) == 0 || name.rfind("crf.", 0) == 0;
}

}  // namespace morphtag
