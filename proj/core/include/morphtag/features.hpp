#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "morphtag/lexicon.hpp"
#include "morphtag/vocab.hpp"

namespace morphtag {

inline constexpr std::size_t kDefaultMaxWordLength = 11;

// Fixed-length char ids for the feedforward char encoder: shorter words are
// padded in front with the pad id, longer words lose their leading
// characters so the suffix is kept.
using CharSequence = std::vector<int>;

CharSequence pad_chars(const std::string& form, const Vocab& chars, std::size_t length = kDefaultMaxWordLength);

// Variable-length char ids (char BiLSTM input). Unknown chars map to unk.
std::vector<int> char_ids(const std::string& form, const Vocab& chars);

// Per-slot probability that `form` carries each grammeme: summed frequency
// of the analyses with that (category, value) over the form's total
// frequency. Forms missing from the lexicon, or with zero total
// frequency, get the zero vector.
std::vector<double> grammeme_probabilities(const std::string& form, const GrammemeLexicon& lexicon);

}  // namespace morphtag
