#include "morphtag/batch.hpp"

#include <numeric>

#include "morphtag/error.hpp"

namespace morphtag {

std::size_t Batch::tokens() const { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }

std::vector<double> lookup_grammemes(const std::string& form, const GrammemeLexicon& lexicon) {
  if (lexicon.analyses(form)) return grammeme_probabilities(form, lexicon);
  return grammeme_probabilities(lowercase_utf8(form), lexicon);
}

std::vector<Batch> batch_sentences(const Corpus& corpus, const Vocabs& vocabs, const GrammemeLexicon* lexicon,
                                   const BatchOptions& options, Rng* rng) {
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rng) rng->shuffle(order.begin(), order.end());

  const std::size_t word_len = options.max_word_length;
  const std::size_t gdim = lexicon ? lexicon->slot_count() : 0;
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
    const std::size_t end = std::min(order.size(), begin + options.batch_size);
    Batch b;
    b.sentences = end - begin;
    b.word_length = word_len;
    b.grammeme_dim = gdim;
    for (std::size_t k = begin; k < end; ++k) {
      b.source_index.push_back(order[k]);
      b.lengths.push_back(corpus[order[k]].size());
      b.max_length = std::max(b.max_length, corpus[order[k]].size());
    }
    const std::size_t cells = b.sentences * b.max_length;
    b.mask.assign(cells, 0);
    b.forms.assign(cells, {});
    b.word_ids.assign(cells, Vocab::kPad);
    b.tag_ids.assign(cells, Vocab::kPad);
    b.char_id_matrix.assign(cells * word_len, Vocab::kPad);
    b.char_sequences.assign(cells, {});
    b.grammeme_vectors.assign(cells * gdim, 0.0);
    for (std::size_t s = 0; s < b.sentences; ++s) {
      const Sentence& sentence = corpus[b.source_index[s]];
      for (std::size_t t = 0; t < sentence.size(); ++t) {
        const Token& token = sentence.tokens[t];
        const std::size_t cell = b.at(s, t);
        const std::string form = options.lowercase ? lowercase_utf8(token.form) : token.form;
        b.mask[cell] = 1;
        b.forms[cell] = token.form;
        b.word_ids[cell] = vocabs.words.id(form);
        b.tag_ids[cell] = vocabs.tags.id(token.tag);
        const CharSequence padded = pad_chars(form, vocabs.chars, word_len);
        std::copy(padded.begin(), padded.end(), b.char_id_matrix.begin() + std::ptrdiff_t(cell * word_len));
        b.char_sequences[cell] = char_ids(form, vocabs.chars);
        if (gdim) {
          const auto probs = lookup_grammemes(token.form, *lexicon);
          std::copy(probs.begin(), probs.end(), b.grammeme_vectors.begin() + std::ptrdiff_t(cell * gdim));
        }
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace morphtag
