#include "morphtag/tag_io.hpp"

#include "morphtag/error.hpp"

namespace morphtag {

namespace {

bool is_token_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::string_view without_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

TaggableText parse_taggable(std::string_view text, CorpusFormat format, const std::string& source) {
  TaggableText out;
  out.format = format;
  if (text.empty()) return out;
  auto parts = split(text, '\n');
  out.trailing_newline = text.back() == '\n';
  if (out.trailing_newline) parts.pop_back();
  Sentence current;
  std::vector<std::size_t> current_lines;
  const auto flush = [&] {
    if (current.tokens.empty()) return;
    out.sentences.push_back(std::move(current));
    out.token_lines.push_back(std::move(current_lines));
    current = {};
    current_lines.clear();
  };
  for (std::size_t n = 0; n < parts.size(); ++n) {
    out.lines.emplace_back(parts[n]);
    const std::string_view line = without_cr(parts[n]);
    if (line.empty()) {
      flush();
      continue;
    }
    if (format == CorpusFormat::tsv) {
      const auto form = split(line, '\t').front();
      if (form.empty()) throw ParseError(source, n + 1, "empty form");
      current.tokens.push_back({std::string(form), {}});
      current_lines.push_back(n);
      continue;
    }
    if (line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 10) {
      throw ParseError(source, n + 1, "expected 10 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (!is_token_id(fields[0])) continue;
    if (fields[1].empty()) throw ParseError(source, n + 1, "empty FORM");
    current.tokens.push_back({std::string(fields[1]), {}});
    current_lines.push_back(n);
  }
  flush();
  return out;
}

std::string render_tagged(const TaggableText& input, const std::vector<std::vector<std::string>>& tags) {
  if (tags.size() != input.sentences.size()) throw DimensionError("render_tagged: sentence count mismatch");
  std::vector<std::string> lines = input.lines;
  for (std::size_t s = 0; s < tags.size(); ++s) {
    if (tags[s].size() != input.token_lines[s].size()) throw DimensionError("render_tagged: sentence length mismatch");
    for (std::size_t t = 0; t < tags[s].size(); ++t) {
      std::string& line = lines[input.token_lines[s][t]];
      const bool cr = !line.empty() && line.back() == '\r';
      const std::string body(without_cr(line));
      if (input.format == CorpusFormat::tsv) {
        line = std::string(split(body, '\t').front()) + '\t' + tags[s][t];
      } else {
        const ParsedTag parsed = parse_tag(tags[s][t]);
        std::string feats;
        for (const auto& [cat, val] : parsed.features) feats += (feats.empty() ? "" : "|") + cat + "=" + val;
        auto fields = split(body, '\t');
        std::string rebuilt;
        for (std::size_t f = 0; f < fields.size(); ++f) {
          if (f) rebuilt += '\t';
          if (f == 3) {
            rebuilt += parsed.pos;
          } else if (f == 5) {
            rebuilt += feats.empty() ? "_" : feats;
          } else {
            rebuilt += fields[f];
          }
        }
        line = std::move(rebuilt);
      }
      if (cr) line += '\r';
    }
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += lines[i];
    if (i + 1 < lines.size() || input.trailing_newline) out += '\n';
  }
  return out;
}

}  // namespace morphtag
