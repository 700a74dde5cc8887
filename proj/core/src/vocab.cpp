#include "morphtag/vocab.hpp"

#include <algorithm>

#include "morphtag/error.hpp"

namespace morphtag {

Vocab::Vocab(Kind kind) : kind_(kind) {
  const std::vector<std::string> reserved =
      kind == Kind::symbols ? std::vector<std::string>{"<pad>", "<unk>"}
                            : std::vector<std::string>{"<pad>", "<bos>", "<eos>"};
  for (const auto& s : reserved) {
    symbol_to_id_.emplace(s, int(id_to_symbol_.size()));
    id_to_symbol_.push_back(s);
  }
}

Vocab Vocab::from_symbols(Kind kind, const std::vector<std::string>& symbols) {
  Vocab vocab(kind);
  for (const auto& s : symbols) vocab.add(s);
  return vocab;
}

int Vocab::add(const std::string& symbol) {
  const auto [it, inserted] = symbol_to_id_.emplace(symbol, int(id_to_symbol_.size()));
  if (inserted) id_to_symbol_.push_back(symbol);
  return it->second;
}

std::optional<int> Vocab::find(const std::string& symbol) const {
  const auto it = symbol_to_id_.find(symbol);
  if (it == symbol_to_id_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(const std::string& symbol) const {
  if (const auto found = find(symbol)) return *found;
  return kind_ == Kind::symbols ? kUnk : -1;
}

const std::string& Vocab::symbol(int id) const {
  if (id < 0 || std::size_t(id) >= id_to_symbol_.size()) {
    throw DimensionError("vocab id " + std::to_string(id) + " out of range [0, " + std::to_string(size()) + ")");
  }
  return id_to_symbol_[std::size_t(id)];
}

std::vector<std::string> Vocab::entries() const {
  return {id_to_symbol_.begin() + std::ptrdiff_t(reserved()), id_to_symbol_.end()};
}

std::vector<std::string> rank_symbols(const std::unordered_map<std::string, std::size_t>& counts,
                                      std::size_t min_count, std::size_t cap) {
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [symbol, count] : counts) {
    if (count >= min_count) ranked.emplace_back(symbol, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (cap > 0 && ranked.size() > cap) ranked.resize(cap);
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [symbol, count] : ranked) out.push_back(std::move(symbol));
  return out;
}

Vocabs build_vocabs(const Corpus& corpus, const VocabOptions& options) {
  std::unordered_map<std::string, std::size_t> char_counts, word_counts, tag_counts;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) {
      const std::string form = options.lowercase ? lowercase_utf8(token.form) : token.form;
      ++word_counts[form];
      ++tag_counts[token.tag];
      for (auto& c : utf8_chars(form)) ++char_counts[c];
    }
  }
  Vocabs vocabs;
  vocabs.chars = Vocab::from_symbols(Vocab::Kind::symbols, rank_symbols(char_counts, 1, 0));
  vocabs.words = Vocab::from_symbols(Vocab::Kind::symbols,
                                     rank_symbols(word_counts, std::max<std::size_t>(1, options.min_word_freq),
                                                  options.max_word_vocab));
  vocabs.tags = Vocab::from_symbols(Vocab::Kind::tags, rank_symbols(tag_counts, 1, 0));
  return vocabs;
}

}  // namespace morphtag
