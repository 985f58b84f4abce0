#ifndef TWISTER_VOCAB_HPP
#define TWISTER_VOCAB_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twister/lexicon.hpp"
#include "twister/phonology.hpp"

namespace twister {

struct TopicPhrase {
  std::string modifier;
  std::string noun;
  std::string text() const { return modifier + " " + noun; }
};

// Word vectors in the plain `token v1 ... vd` text format. A first line of
// exactly two integers (word2vec header) is skipped.
class EmbeddingTable {
 public:
  static EmbeddingTable parse(std::istream& in, const std::string& source_name = "<embeddings>");
  static EmbeddingTable load(const std::filesystem::path& path);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  // Case-insensitive; nullptr when absent.
  const std::vector<double>* find(std::string_view token) const;
  void insert(std::string token, std::vector<double> vector);

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Ordered consonants allowed as target phonemes. Order doubles as the
// tie-break order for nearest_phoneme.
using WordInitialSet = std::vector<PhonemeId>;

// One IPA or ARPABET symbol per line; each must be a consonant marked legal
// word-initially in the table.
WordInitialSet parse_word_initial_set(std::istream& in, const PhonemeTable& table,
                                      const std::string& source_name = "<wip>");
WordInitialSet load_word_initial_set(const std::filesystem::path& path, const PhonemeTable& table);

TopicPhrase sample_topic(std::uint64_t seed, std::span<const std::string> modifiers,
                         std::span<const std::string> nouns);

// ph1 drawn uniformly from `wip` with the seed; ph2 is its nearest neighbour
// among the rest of `wip`.
std::pair<PhonemeId, PhonemeId> select_phoneme_pair(const WordInitialSet& wip, std::uint64_t seed,
                                                    const PhonemeTable& table);
PhonemeId secondary_phoneme(PhonemeId primary, const WordInitialSet& wip, const PhonemeTable& table);

// Mean of the vectors of the tokens the table knows.
std::vector<double> embed_phrase(std::span<const std::string> tokens, const EmbeddingTable& emb);

struct ScoredWord {
  std::string token;
  PhonemeId initial;
  double score = 0.0;
};

// Lexicon words starting with `initial`, ranked by cosine similarity to the
// phrase embedding. Words without vectors are dropped. Ties go alphabetical.
std::vector<ScoredWord> candidate_words(const Lexicon& lex, PhonemeId initial,
                                        std::string_view topic_phrase, const EmbeddingTable& emb,
                                        std::size_t n);

struct CandidateList {
  TopicPhrase topic;
  PhonemeId ph1;
  PhonemeId ph2;
  std::vector<ScoredWord> words;  // shuffled union of both banks
  std::uint64_t seed = 0;
};

// Draws ph1 and shuffles the combined banks from one Rng stream seeded with
// `seed`. Throws InvalidInput when both banks come back empty.
CandidateList build_candidate_list(const TopicPhrase& topic, const WordInitialSet& wip,
                                   const Lexicon& lex, const EmbeddingTable& emb, std::size_t n,
                                   std::uint64_t seed);

}  // namespace twister

#endif  // TWISTER_VOCAB_HPP
