#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "morphtag/corpus.hpp"
#include "morphtag/features.hpp"
#include "morphtag/lexicon.hpp"
#include "morphtag/rng.hpp"
#include "morphtag/vocab.hpp"

namespace morphtag {

struct BatchOptions {
  std::size_t batch_size = 32;
  std::size_t max_word_length = kDefaultMaxWordLength;
  bool lowercase = false;
};

// Padded group of sentences. Per-position arrays are sentence-major,
// position (s, t) lives at s * max_length + t.
struct Batch {
  std::size_t sentences = 0;
  std::size_t max_length = 0;
  std::size_t word_length = kDefaultMaxWordLength;
  std::size_t grammeme_dim = 0;

  std::vector<std::size_t> lengths;
  std::vector<std::size_t> source_index;  // sentence index in the input corpus
  std::vector<std::uint8_t> mask;         // 1 iff t < lengths[s]
  std::vector<std::string> forms;         // surface forms, empty at masked positions
  std::vector<int> word_ids;              // pad at masked positions
  std::vector<int> tag_ids;               // pad at masked positions, -1 for unseen tags
  std::vector<int> char_id_matrix;        // [sentences x max_length x word_length]
  std::vector<std::vector<int>> char_sequences;  // unpadded char ids, empty at masked positions
  std::vector<double> grammeme_vectors;   // [sentences x max_length x grammeme_dim]

  std::size_t at(std::size_t s, std::size_t t) const { return s * max_length + t; }
  std::size_t tokens() const;
};

// Shuffles with `rng` when given (otherwise keeps corpus order), groups
// into batches of batch_size sentences and pads each batch to its longest
// sentence. `lexicon` may be null when grammeme features are off.
std::vector<Batch> batch_sentences(const Corpus& corpus, const Vocabs& vocabs, const GrammemeLexicon* lexicon,
                                   const BatchOptions& options, Rng* rng = nullptr);

// Grammeme probabilities for a surface form; falls back to the lowercased
// form when the exact form is not in the lexicon.
std::vector<double> lookup_grammemes(const std::string& form, const GrammemeLexicon& lexicon);

}  // namespace morphtag
