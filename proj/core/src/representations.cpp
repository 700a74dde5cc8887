#include "morphtag/representations.hpp"

#include "morphtag/corpus.hpp"

namespace morphtag {

CharBatch make_char_batch(const std::vector<std::string>& forms, const Vocab& chars, std::size_t word_length,
                          bool lowercase) {
  CharBatch batch;
  batch.count = forms.size();
  batch.word_length = word_length;
  batch.padded.reserve(forms.size() * word_length);
  batch.sequences.reserve(forms.size());
  for (const auto& raw : forms) {
    const std::string form = lowercase ? lowercase_utf8(raw) : raw;
    const CharSequence padded = pad_chars(form, chars, word_length);
    batch.padded.insert(batch.padded.end(), padded.begin(), padded.end());
    batch.sequences.push_back(char_ids(form, chars));
  }
  return batch;
}

}  // namespace morphtag
