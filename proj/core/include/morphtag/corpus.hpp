#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace morphtag {

struct Token {
  std::string form;
  std::string tag;  // full grammatical value, "POS|Cat=Val|..." with sorted features
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
};

using Corpus = std::vector<Sentence>;

enum class CorpusFormat { tsv, conllu };

// ".conllu" / ".conll" extensions select CoNLL-U, anything else TSV.
CorpusFormat guess_format(const std::string& path);

// A tag split into its part of speech and its Cat=Val features.
struct ParsedTag {
  std::string pos;
  std::vector<std::pair<std::string, std::string>> features;  // sorted by category
};

// Parses "POS|Cat=Val|...". Throws ParseError (line 0) for an empty POS or
// a feature without '='.
ParsedTag parse_tag(std::string_view tag);

// Canonical tag string from a UPOS value and a CoNLL-U FEATS value
// ("_" for none). Features are sorted so that their order never matters.
std::string canonical_tag(std::string_view upos, std::string_view feats);

// Re-sorts the features of a full tag string.
std::string canonicalize_tag(std::string_view tag);

// Keeps POS plus the listed categories.
std::string project_tag(std::string_view tag, const std::vector<std::string>& categories);

Corpus read_conllu(const std::string& path);
Corpus parse_conllu(std::string_view text, const std::string& source = "<string>");

Corpus read_tsv_tagged(const std::string& path);
Corpus parse_tsv_tagged(std::string_view text, const std::string& source = "<string>");
std::string format_tsv_tagged(const Corpus& corpus);
void write_tsv_tagged(const std::string& path, const Corpus& corpus);

Corpus read_corpus(const std::string& path);

std::size_t count_tokens(const Corpus& corpus);

// Whole-file helpers shared by the readers.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::vector<std::string_view> split(std::string_view text, char sep);

// UTF-8 helpers. Characters are Unicode scalar values; bytes that do not
// form a valid sequence are treated as one character each.
std::vector<std::string> utf8_chars(std::string_view text);
std::string lowercase_utf8(std::string_view text);

}  // namespace morphtag
