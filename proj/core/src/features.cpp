#include "morphtag/features.hpp"

#include "morphtag/corpus.hpp"
#include "morphtag/error.hpp"

namespace morphtag {

std::vector<int> char_ids(const std::string& form, const Vocab& chars) {
  std::vector<int> ids;
  for (const auto& c : utf8_chars(form)) ids.push_back(chars.id(c));
  return ids;
}

CharSequence pad_chars(const std::string& form, const Vocab& chars, std::size_t length) {
  if (length == 0) throw ConfigError("max word length must be positive");
  const std::vector<int> ids = char_ids(form, chars);
  CharSequence seq(length, Vocab::kPad);
  const std::size_t take = std::min(length, ids.size());
  std::copy(ids.end() - std::ptrdiff_t(take), ids.end(), seq.end() - std::ptrdiff_t(take));
  return seq;
}

std::vector<double> grammeme_probabilities(const std::string& form, const GrammemeLexicon& lexicon) {
  std::vector<double> probs(lexicon.slot_count(), 0.0);
  const auto* analyses = lexicon.analyses(form);
  if (!analyses) return probs;
  double total = 0;
  for (const auto& a : *analyses) total += a.frequency;
  if (!(total > 0)) return probs;
  for (const auto& category : lexicon.categories()) {
    for (const auto& a : *analyses) {
      const ParsedTag parsed = parse_tag(a.tag);
      std::string value = "_";
      if (category.name == "POS") {
        value = parsed.pos;
      } else {
        for (const auto& [cat, val] : parsed.features) {
          if (cat == category.name) value = val;
        }
      }
      const long slot = lexicon.slot(category.name, value);
      if (slot >= 0) probs[std::size_t(slot)] += a.frequency;
    }
  }
  for (auto& p : probs) p /= total;
  return probs;
}

}  // namespace morphtag
