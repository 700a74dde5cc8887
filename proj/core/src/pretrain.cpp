#include "morphtag/pretrain.hpp"

namespace morphtag {

std::vector<std::string> select_pretrain_words(const Corpus& corpus, const EmbeddingTable& table, bool use_all,
                                               bool lowercase) {
  if (use_all) return table.words();
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) {
      std::string form = lowercase ? lowercase_utf8(token.form) : token.form;
      if (seen.count(form) || !table.index(form)) continue;
      seen.insert(form);
      words.push_back(std::move(form));
    }
  }
  return words;
}

}  // namespace morphtag
