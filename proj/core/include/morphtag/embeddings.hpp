#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace morphtag {

// Pretrained word vectors read from the word2vec/GloVe text format.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim) : dim_(dim) {}

  // Returns false (and ignores the row) when the word is already present.
  bool add(const std::string& word, std::span<const float> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> index(const std::string& word) const;
  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  // Lines whose word repeated an earlier one (first occurrence wins).
  std::size_t duplicates() const { return duplicates_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t duplicates_ = 0;
};

// "word v1 ... vd" per line, space separated. A first line holding exactly
// two integers is read as a "count dim" header.
EmbeddingTable read_embeddings_text(const std::string& path);
EmbeddingTable parse_embeddings_text(std::string_view text, const std::string& source = "<string>");

}  // namespace morphtag
