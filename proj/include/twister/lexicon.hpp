#ifndef TWISTER_LEXICON_HPP
#define TWISTER_LEXICON_HPP

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twister/phonology.hpp"

namespace twister {

// One phoneme as it appears in a pronunciation; stress is 0/1/2 on vowels
// taken from the lexicon, -1 when absent.
struct Phone {
  PhonemeId id;
  int stress = -1;
  bool operator==(const Phone&) const = default;
};

using Pronunciation = std::vector<Phone>;

PhonemeSequence phonemes_of(std::span<const Phone> phones);

// Context-free longest-match grapheme to phoneme rules used for words the
// lexicon does not cover. File: `grapheme<TAB>PH1 PH2 ...`, '#' comments.
class LetterToSound {
 public:
  static LetterToSound parse(std::istream& in, const PhonemeTable& table,
                             const std::string& source_name = "<rules>");
  static LetterToSound load(const std::filesystem::path& path, const PhonemeTable& table);

  // Input is expected lowercase. Characters no rule covers are skipped.
  Pronunciation apply(std::string_view word) const;
  std::size_t rule_count() const { return rules_.size(); }

 private:
  std::unordered_map<std::string, Pronunciation> rules_;
  std::size_t longest_ = 0;
};

struct LexiconEntry {
  std::string headword;                       // lowercase
  std::vector<Pronunciation> pronunciations;  // first is primary
};

// CMU Pronouncing Dictionary contents plus a word-initial phoneme index.
//
// Accepted line shapes: `WORD  PH1 PH2 ...` (upstream double-space form),
// `word PH1 PH2 ...` (single space), `WORD(2) ...` variants folded into the
// base entry, `;;;` comment lines, and trailing `# ...` annotations.
class Lexicon {
 public:
  Lexicon(std::shared_ptr<const PhonemeTable> table, LetterToSound fallback);

  static Lexicon parse(std::istream& in, std::shared_ptr<const PhonemeTable> table,
                       LetterToSound fallback, const std::string& source_name = "<lexicon>");
  static Lexicon load(const std::filesystem::path& path, std::shared_ptr<const PhonemeTable> table,
                      LetterToSound fallback);

  std::size_t size() const { return entries_.size(); }
  const LexiconEntry* find(std::string_view word) const;  // case-insensitive
  bool contains(std::string_view word) const { return find(word) != nullptr; }
  // Sorted headwords whose primary pronunciation starts with `initial`.
  std::span<const std::string> words_with_initial(PhonemeId initial) const;
  std::vector<std::string> headwords() const;

  const PhonemeTable& table() const { return *table_; }
  std::shared_ptr<const PhonemeTable> table_ptr() const { return table_; }
  const LetterToSound& fallback() const { return fallback_; }

 private:
  void build_index();

  std::shared_ptr<const PhonemeTable> table_;
  LetterToSound fallback_;
  std::unordered_map<std::string, LexiconEntry> entries_;
  std::vector<std::vector<std::string>> initial_index_;
};

struct TranscribedWord {
  std::string token;  // punctuation-stripped, original case
  Pronunciation phones;
  bool oov = false;
  PhonemeSequence phonemes() const { return phonemes_of(phones); }
};

struct Transcription {
  std::vector<TranscribedWord> words;

  bool empty() const { return words.empty(); }
  std::size_t phoneme_count() const;
  PhonemeSequence flattened() const;
  PhonemeSequence initials() const;
};

// Primary lexicon pronunciation if present; otherwise hyphenated parts are
// transcribed one by one, and remaining misses go through the letter-to-sound
// fallback with `oov` set. Throws InvalidInput when the token has no letters
// or digits.
TranscribedWord transcribe_word(std::string_view token, const Lexicon& lex);

// Whitespace tokenization with edge punctuation stripped; empty text yields
// an empty transcription.
Transcription transcribe_text(std::string_view text, const Lexicon& lex);

// Phonemes joined by one space, words by two; lexicon stress digits kept.
std::string render_arpabet(const Transcription& t, const PhonemeTable& table);
// IPA symbols concatenated per word, words joined by one space.
std::string render_ipa(const Transcription& t, const PhonemeTable& table);

// Vowel phonemes in the transcription, falling back to orthographic vowel
// groups when the transcription has none. Never below 1.
int syllable_count(std::string_view token, const Lexicon& lex);

}  // namespace twister

#endif  // TWISTER_LEXICON_HPP
