#include "morphtag/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "morphtag/corpus.hpp"
#include "morphtag/error.hpp"

namespace morphtag {

void GrammemeLexicon::add(const std::string& form, const std::string& tag, double frequency) {
  if (!(frequency >= 0) || !std::isfinite(frequency)) {
    throw ParseError("lexicon entry '" + form + "'", 0, "frequency must be a finite nonnegative number");
  }
  const std::string canonical = canonicalize_tag(tag);
  auto& list = entries_[form];
  const auto it = std::find_if(list.begin(), list.end(), [&](const Analysis& a) { return a.tag == canonical; });
  if (it != list.end()) {
    it->frequency += frequency;
  } else {
    list.push_back({canonical, frequency});
  }
  dirty_ = true;
}

const std::vector<Analysis>* GrammemeLexicon::analyses(const std::string& form) const {
  const auto it = entries_.find(form);
  return it == entries_.end() ? nullptr : &it->second;
}

void GrammemeLexicon::rebuild() const {
  std::map<std::string, std::set<std::string>> values;
  std::map<std::string, bool> sometimes_absent;
  std::size_t analysis_count = 0;
  std::map<std::string, std::size_t> presence;
  for (const auto& [form, list] : entries_) {
    for (const auto& analysis : list) {
      const ParsedTag parsed = parse_tag(analysis.tag);
      values["POS"].insert(parsed.pos);
      ++analysis_count;
      for (const auto& [cat, val] : parsed.features) {
        values[cat].insert(val);
        ++presence[cat];
      }
    }
  }
  categories_.clear();
  slots_.clear();
  long next = 0;
  for (auto& [name, vals] : values) {
    if (name != "POS" && presence[name] < analysis_count) vals.insert("_");
    GrammemeCategory category{name, {vals.begin(), vals.end()}};
    for (const auto& v : category.values) slots_[{name, v}] = next++;
    categories_.push_back(std::move(category));
  }
  dirty_ = false;
}

const std::vector<GrammemeCategory>& GrammemeLexicon::categories() const {
  if (dirty_) rebuild();
  return categories_;
}

std::size_t GrammemeLexicon::slot_count() const {
  if (dirty_) rebuild();
  return slots_.size();
}

long GrammemeLexicon::slot(const std::string& category, const std::string& value) const {
  if (dirty_) rebuild();
  const auto it = slots_.find({category, value});
  return it == slots_.end() ? -1 : it->second;
}

std::vector<std::string> GrammemeLexicon::slot_names() const {
  std::vector<std::string> names;
  for (const auto& c : categories()) {
    for (const auto& v : c.values) names.push_back(c.name + "=" + v);
  }
  return names;
}

GrammemeLexicon parse_grammeme_lexicon(std::string_view text, const std::string& source) {
  GrammemeLexicon lexicon;
  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(source, n + 1, "expected form<TAB>tag<TAB>frequency, got " + std::to_string(fields.size()) +
                                          " fields");
    }
    if (fields[0].empty()) throw ParseError(source, n + 1, "empty form");
    const std::string freq_text(fields[2]);
    char* end = nullptr;
    const double frequency = std::strtod(freq_text.c_str(), &end);
    if (freq_text.empty() || end != freq_text.c_str() + freq_text.size() || !std::isfinite(frequency)) {
      throw ParseError(source, n + 1, "non-numeric frequency '" + freq_text + "'");
    }
    if (frequency < 0) throw ParseError(source, n + 1, "negative frequency " + freq_text);
    try {
      lexicon.add(std::string(fields[0]), std::string(fields[1]), frequency);
    } catch (const ParseError& e) {
      throw ParseError(source, n + 1, e.what());
    }
  }
  lexicon.categories();
  return lexicon;
}

GrammemeLexicon read_grammeme_lexicon(const std::string& path) {
  return parse_grammeme_lexicon(read_file(path), path);
}

}  // namespace morphtag
