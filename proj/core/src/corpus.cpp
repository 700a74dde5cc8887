#include "morphtag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "morphtag/error.hpp"

namespace morphtag {

namespace {

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::string join_features(const std::vector<std::pair<std::string, std::string>>& features) {
  std::string out;
  for (const auto& [cat, val] : features) {
    out += '|';
    out += cat;
    out += '=';
    out += val;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += char(cp);
  } else if (cp < 0x800) {
    out += char(0xC0 | (cp >> 6));
    out += char(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += char(0xE0 | (cp >> 12));
    out += char(0x80 | ((cp >> 6) & 0x3F));
    out += char(0x80 | (cp & 0x3F));
  } else {
    out += char(0xF0 | (cp >> 18));
    out += char(0x80 | ((cp >> 12) & 0x3F));
    out += char(0x80 | ((cp >> 6) & 0x3F));
    out += char(0x80 | (cp & 0x3F));
  }
}

// Length of the valid UTF-8 sequence starting at s[i], 0 if invalid.
std::size_t utf8_length(std::string_view s, std::size_t i, char32_t* cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  char32_t value = 0;
  if (b0 < 0x80) {
    *cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    value = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    value = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    value = b0 & 0x07;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    value = (value << 6) | (b & 0x3F);
  }
  static constexpr char32_t min_value[] = {0, 0, 0x80, 0x800, 0x10000};
  if (value < min_value[len] || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return 0;
  *cp = value;
  return len;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if ((cp >= 0xC0 && cp <= 0xDE && cp != 0xD7)) return cp + 32;      // Latin-1
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;                  // Cyrillic А-Я
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 80;                  // Cyrillic Ѐ-Џ
  if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) return cp + 32;  // Greek
  return cp;
}

}  // namespace

CorpusFormat guess_format(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".conllu") || ends_with(".conll") ? CorpusFormat::conllu : CorpusFormat::tsv;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

ParsedTag parse_tag(std::string_view tag) {
  const auto parts = split(tag, '|');
  ParsedTag parsed;
  parsed.pos = std::string(parts.front());
  if (parsed.pos.empty()) throw ParseError("tag '" + std::string(tag) + "'", 0, "empty part of speech");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == parts[i].size()) {
      throw ParseError("tag '" + std::string(tag) + "'", 0, "malformed feature '" + std::string(parts[i]) + "'");
    }
    parsed.features.emplace_back(std::string(parts[i].substr(0, eq)), std::string(parts[i].substr(eq + 1)));
  }
  std::sort(parsed.features.begin(), parsed.features.end());
  return parsed;
}

std::string canonical_tag(std::string_view upos, std::string_view feats) {
  if (feats.empty() || feats == "_") return std::string(upos);
  std::string joined(upos);
  joined += '|';
  joined += feats;
  const ParsedTag parsed = parse_tag(joined);
  return parsed.pos + join_features(parsed.features);
}

std::string canonicalize_tag(std::string_view tag) {
  const ParsedTag parsed = parse_tag(tag);
  return parsed.pos + join_features(parsed.features);
}

std::string project_tag(std::string_view tag, const std::vector<std::string>& categories) {
  ParsedTag parsed = parse_tag(tag);
  std::erase_if(parsed.features, [&](const auto& f) {
    return std::find(categories.begin(), categories.end(), f.first) == categories.end();
  });
  return parsed.pos + join_features(parsed.features);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return buffer.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) throw IoError("error while writing '" + path + "'");
}

Corpus parse_conllu(std::string_view text, const std::string& source) {
  Corpus corpus;
  Sentence current;
  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = strip_cr(lines[n]);
    if (line.empty()) {
      if (!current.tokens.empty()) corpus.push_back(std::move(current));
      current = {};
      continue;
    }
    if (line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 10) {
      throw ParseError(source, n + 1, "expected 10 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    if (fields[1].empty()) throw ParseError(source, n + 1, "empty FORM");
    if (fields[3].empty() || fields[3] == "_") throw ParseError(source, n + 1, "missing UPOS");
    try {
      current.tokens.push_back({std::string(fields[1]), canonical_tag(fields[3], fields[5])});
    } catch (const ParseError& e) {
      throw ParseError(source, n + 1, e.what());
    }
  }
  if (!current.tokens.empty()) corpus.push_back(std::move(current));
  return corpus;
}

Corpus read_conllu(const std::string& path) { return parse_conllu(read_file(path), path); }

Corpus parse_tsv_tagged(std::string_view text, const std::string& source) {
  Corpus corpus;
  Sentence current;
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = strip_cr(lines[n]);
    if (line.empty()) {
      if (!current.tokens.empty()) corpus.push_back(std::move(current));
      current = {};
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ParseError(source, n + 1, "expected form<TAB>tag, got " + std::to_string(fields.size()) + " fields");
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(source, n + 1, "empty form or tag");
    current.tokens.push_back({std::string(fields[0]), std::string(fields[1])});
  }
  if (!current.tokens.empty()) corpus.push_back(std::move(current));
  return corpus;
}

Corpus read_tsv_tagged(const std::string& path) { return parse_tsv_tagged(read_file(path), path); }

std::string format_tsv_tagged(const Corpus& corpus) {
  std::string out;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) {
      out += token.form;
      out += '\t';
      out += token.tag;
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_tsv_tagged(const std::string& path, const Corpus& corpus) { write_file(path, format_tsv_tagged(corpus)); }

Corpus read_corpus(const std::string& path) {
  return guess_format(path) == CorpusFormat::conllu ? read_conllu(path) : read_tsv_tagged(path);
}

std::size_t count_tokens(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& s : corpus) n += s.size();
  return n;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp = 0;
    const std::size_t len = utf8_length(text, i, &cp);
    const std::size_t take = len ? len : 1;
    chars.emplace_back(text.substr(i, take));
    i += take;
  }
  return chars;
}

std::string lowercase_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp = 0;
    const std::size_t len = utf8_length(text, i, &cp);
    if (len == 0) {
      out += text[i++];
      continue;
    }
    append_utf8(out, to_lower(cp));
    i += len;
  }
  return out;
}

}  // namespace morphtag
