#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "morphtag/corpus.hpp"

namespace morphtag {

// Bidirectional symbol <-> id map. Symbol vocabularies (chars, words)
// reserve pad=0 and unk=1; tag vocabularies reserve pad=0, bos=1, eos=2.
class Vocab {
 public:
  enum class Kind { symbols, tags };

  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  explicit Vocab(Kind kind = Kind::symbols);

  // Builds a vocabulary whose non-reserved ids follow `symbols` in order.
  static Vocab from_symbols(Kind kind, const std::vector<std::string>& symbols);

  int add(const std::string& symbol);
  std::optional<int> find(const std::string& symbol) const;
  // Symbol vocabularies map unknown symbols to kUnk; tag vocabularies
  // return -1, which never equals a predicted id.
  int id(const std::string& symbol) const;
  const std::string& symbol(int id) const;

  Kind kind() const { return kind_; }
  std::size_t size() const { return id_to_symbol_.size(); }
  std::size_t reserved() const { return kind_ == Kind::symbols ? 2 : 3; }
  // Non-reserved symbols in id order.
  std::vector<std::string> entries() const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.kind_ == b.kind_ && a.id_to_symbol_ == b.id_to_symbol_;
  }

 private:
  Kind kind_;
  std::vector<std::string> id_to_symbol_;
  std::unordered_map<std::string, int> symbol_to_id_;
};

struct Vocabs {
  Vocab chars{Vocab::Kind::symbols};
  Vocab words{Vocab::Kind::symbols};
  Vocab tags{Vocab::Kind::tags};
};

struct VocabOptions {
  std::size_t min_word_freq = 1;
  std::size_t max_word_vocab = 10000;
  bool lowercase = false;
};

// Ids are assigned by descending frequency, ties broken lexicographically.
Vocabs build_vocabs(const Corpus& corpus, const VocabOptions& options = {});

// Symbols sorted by descending count then lexicographically, with a
// minimum count and an optional cap (0 = unlimited).
std::vector<std::string> rank_symbols(const std::unordered_map<std::string, std::size_t>& counts,
                                      std::size_t min_count, std::size_t cap);

}  // namespace morphtag
