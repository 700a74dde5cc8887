#include "morphtag/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "morphtag/corpus.hpp"
#include "morphtag/error.hpp"

namespace morphtag {

namespace {

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool is_integer(std::string_view s) {
  unsigned long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

bool EmbeddingTable::add(const std::string& word, std::span<const float> vector) {
  if (index_.count(word)) {
    ++duplicates_;
    return false;
  }
  index_.emplace(word, words_.size());
  words_.push_back(word);
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::size_t> EmbeddingTable::index(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable parse_embeddings_text(std::string_view text, const std::string& source) {
  EmbeddingTable table;
  std::size_t dim = 0;
  std::vector<float> values;
  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fields = fields_of(line);
    if (fields.empty()) continue;
    if (n == 0 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    const std::size_t d = fields.size() - 1;
    if (d == 0) throw ParseError(source, n + 1, "word without vector values");
    if (dim == 0) {
      dim = d;
      table = EmbeddingTable(dim);
    } else if (d != dim) {
      throw ParseError(source, n + 1, "expected " + std::to_string(dim) + " values, got " + std::to_string(d));
    }
    values.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      const std::string field(fields[k + 1]);
      char* end = nullptr;
      const float v = std::strtof(field.c_str(), &end);
      if (end != field.c_str() + field.size() || !std::isfinite(v)) {
        throw ParseError(source, n + 1, "non-numeric value '" + field + "'");
      }
      values[k] = v;
    }
    table.add(std::string(fields[0]), values);
  }
  return table;
}

EmbeddingTable read_embeddings_text(const std::string& path) { return parse_embeddings_text(read_file(path), path); }

}  // namespace morphtag
