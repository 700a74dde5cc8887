#include "morphtag/tagger.hpp"

namespace morphtag {

Packing::Packing(const std::vector<std::size_t>& sentence_lengths) : lengths(sentence_lengths) {
  sentences = lengths.size();
  for (std::size_t len : lengths) {
    offsets.push_back(tokens);
    tokens += len;
    max_length = std::max(max_length, len);
  }
  time_to_packed.assign(sentences * max_length, -1);
  valid.assign(sentences * max_length, 0);
  packed_to_time.assign(tokens, 0);
  for (std::size_t s = 0; s < sentences; ++s) {
    for (std::size_t t = 0; t < lengths[s]; ++t) {
      const std::size_t row = t * sentences + s;
      time_to_packed[row] = std::int64_t(offsets[s] + t);
      valid[row] = 1;
      packed_to_time[offsets[s] + t] = std::int64_t(row);
    }
  }
}

template class TaggerModel<float>;
template class TaggerModel<double>;

}  // namespace morphtag
