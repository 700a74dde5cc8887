#pragma once

// Tagging of pre-tokenized files. Forms and all untouched bytes are copied
// through unchanged.

#include <string>
#include <string_view>
#include <vector>

#include "morphtag/corpus.hpp"
#include "morphtag/tagger.hpp"

namespace morphtag {

// Line-level view of an input file: the sentences to tag and, for every
// token, the line it came from.
struct TaggableText {
  CorpusFormat format = CorpusFormat::tsv;
  std::vector<std::string> lines;  // without '\n'
  bool trailing_newline = false;
  Corpus sentences;                // tags left empty
  std::vector<std::vector<std::size_t>> token_lines;
};

// TSV: one form per line (a second column, if any, is ignored), blank lines
// between sentences. CoNLL-U: token lines with an integer ID; comments,
// ranges and empty nodes are kept but not tagged.
TaggableText parse_taggable(std::string_view text, CorpusFormat format, const std::string& source = "<string>");

// TSV lines become form<TAB>tag; CoNLL-U lines get UPOS and FEATS from the
// tag, every other column untouched.
std::string render_tagged(const TaggableText& input, const std::vector<std::vector<std::string>>& tags);

template <typename T>
std::string tag_text(TaggerModel<T>& model, std::string_view text, CorpusFormat format, std::size_t batch_size = 32,
                     std::size_t threads = 1, const std::string& source = "<string>") {
  const TaggableText input = parse_taggable(text, format, source);
  if (input.sentences.empty()) return render_tagged(input, {});
  return render_tagged(input, model.tag_corpus(input.sentences, batch_size, threads));
}

template <typename T>
void tag_file(TaggerModel<T>& model, const std::string& input_path, const std::string& output_path,
              std::size_t batch_size = 32, std::size_t threads = 1) {
  write_file(output_path, tag_text(model, read_file(input_path), guess_format(input_path), batch_size, threads,
                                   input_path));
}

}  // namespace morphtag
