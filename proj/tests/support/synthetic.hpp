#pragma once

// Synthetic tagging languages for tests: a tag bigram chain emits words
// whose suffix marks their tag, with a share of forms ambiguous between two
// tags so context matters.

#include <cstdint>
#include <string>
#include <vector>

#include "morphtag/config.hpp"
#include "morphtag/corpus.hpp"
#include "morphtag/embeddings.hpp"
#include "morphtag/lexicon.hpp"
#include "morphtag/rng.hpp"

namespace morphtag::testing {

struct LanguageParams {
  std::size_t tags = 10;
  std::size_t stems_per_tag = 12;
  double ambiguous_share = 0.15;
  std::size_t min_length = 4;
  std::size_t max_length = 10;
  // Offset into the tag inventory, so two languages can have disjoint tagsets.
  std::size_t tag_offset = 0;
  std::uint64_t seed = 1;
};

class SyntheticLanguage {
 public:
  explicit SyntheticLanguage(const LanguageParams& shape);

  // `label_noise` replaces that share of gold tags with a random other tag.
  Corpus sample(std::size_t sentences, std::uint64_t seed, double label_noise = 0.0) const;

  const std::vector<std::string>& tagset() const { return tags_; }
  // Every (form, tag) the language can emit, with its emission weight.
  GrammemeLexicon lexicon() const;
  std::vector<std::string> forms() const;

 private:
  struct Entry {
    std::string form;
    std::size_t tag;
  };
  LanguageParams shape_;
  std::vector<std::string> tags_;
  std::vector<std::vector<Entry>> by_tag_;
  std::vector<std::vector<double>> transitions_;
};

// Tag strings with POS and features, e.g. "NOUN|Case=Nom|Number=Sing".
std::vector<std::string> tag_inventory();

// Random unit-norm vectors for `words`.
EmbeddingTable random_embeddings(const std::vector<std::string>& words, std::size_t dim, std::uint64_t seed);

// Random lowercase words of 3-9 letters, distinct.
std::vector<std::string> random_words(std::size_t count, std::uint64_t seed);

// Small dimensions so that tests train in seconds.
ModelConfig tiny_model_config();
TrainConfig tiny_train_config();

}  // namespace morphtag::testing
