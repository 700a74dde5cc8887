#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace morphtag {

struct Analysis {
  std::string tag;
  double frequency = 0;
};

struct GrammemeCategory {
  std::string name;
  std::vector<std::string> values;
};

// Surface form -> possible grammatical values with corpus frequencies.
//
// The grammeme slots are the flattened (category, value) pairs of
// `categories()`: the implicit "POS" category plus every feature category
// seen in the lexicon, all sorted lexicographically. A feature category
// that some analysis lacks gets an extra "_" value so each category's slots
// form a probability simplex.
class GrammemeLexicon {
 public:
  GrammemeLexicon() = default;

  // Repeated (form, tag) pairs have their frequencies summed.
  void add(const std::string& form, const std::string& tag, double frequency);

  const std::vector<Analysis>* analyses(const std::string& form) const;
  const std::map<std::string, std::vector<Analysis>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  const std::vector<GrammemeCategory>& categories() const;
  std::size_t slot_count() const;
  // Flattened slot index, or -1 when the pair is unknown.
  long slot(const std::string& category, const std::string& value) const;
  std::vector<std::string> slot_names() const;  // "Cat=Val"

 private:
  void rebuild() const;

  std::map<std::string, std::vector<Analysis>> entries_;
  mutable bool dirty_ = true;
  mutable std::vector<GrammemeCategory> categories_;
  mutable std::map<std::pair<std::string, std::string>, long> slots_;
};

// Lines "form<TAB>tag<TAB>frequency"; tags use the corpus tag syntax.
GrammemeLexicon read_grammeme_lexicon(const std::string& path);
GrammemeLexicon parse_grammeme_lexicon(std::string_view text, const std::string& source = "<string>");

}  // namespace morphtag
