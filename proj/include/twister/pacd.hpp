#ifndef TWISTER_PACD_HPP
#define TWISTER_PACD_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twister/lexicon.hpp"
#include "twister/lm.hpp"
#include "twister/text.hpp"
#include "twister/vocab.hpp"

namespace twister {

struct DecoderConfig {
  int max_length = 30;       // generated words, function and content alike
  int function_window = 1;   // function words admitted only at rank <= this
  int min_word_length = 3;   // content words need at least this many characters
  int max_repetition = 1;    // content word admitted while count < this
  int scan_limit = 2500;     // candidates requested per step
  WordSet function_words;    // lowercase, no punctuation
  std::optional<WordSet> dictionary;  // unset: the lexicon's headwords
  WordInitialSet wip;
  std::uint64_t seed = 7;

  // Throws InvalidInput on a bound below 1, an empty F or D, or a function
  // word containing punctuation.
  void validate() const;
};

enum class AdmitKind { kFunction, kContent, kReject };
enum class RejectReason { kNone, kLength, kDictionary, kRepetition, kPhoneme };

struct Admission {
  AdmitKind kind = AdmitKind::kReject;
  RejectReason reason = RejectReason::kNone;
  bool operator==(const Admission&) const = default;
};

std::string_view to_string(AdmitKind kind);
std::string_view to_string(RejectReason reason);

// What admission needs to know about a decode in progress.
struct DecodeState {
  PhonemeId ph1;
  PhonemeId ph2;
  std::vector<std::string> generated;
};

// Function-word check first, then content checks in order: length, dictionary,
// repetition, initial phoneme. A rejection names the first failed check.
// Membership and repetition counts are case-insensitive.
Admission admissible(const TokenCandidate& candidate, const DecodeState& state,
                     const DecoderConfig& cfg, const Lexicon& lex);

// ph1 is the first phoneme of the topic's first word when that is a member of
// `wip`; otherwise a seeded draw from `wip`. ph2 is its nearest neighbour.
std::pair<PhonemeId, PhonemeId> pick_target_phonemes(std::string_view topic,
                                                     const WordInitialSet& wip, const Lexicon& lex,
                                                     std::uint64_t seed);

std::string topic_prompt(std::string_view topic);

struct TracedCandidate {
  std::string token;
  int rank = 0;
  Admission admission;
};

struct DecodeStep {
  int step = 0;  // 1-based
  std::string token;
  int rank = 0;
  AdmitKind kind = AdmitKind::kReject;
  std::vector<TracedCandidate> rejected;  // every better-ranked candidate
};

enum class DecodeStatus { kComplete, kExhaustedVocabulary, kProviderError };
std::string_view to_string(DecodeStatus status);

struct DecodeResult {
  std::string topic;
  std::string prompt;
  PhonemeId ph1;
  PhonemeId ph2;
  std::vector<std::string> generated;
  DecodeStatus status = DecodeStatus::kComplete;
  std::string error;
  std::vector<DecodeStep> trace;

  std::string text() const;
};

// Phoneme-aware constrained decoding. Each step scans the provider's top
// cfg.scan_limit candidates in rank order and appends the first admissible
// one. Stops after cfg.max_length words, when a step finds nothing
// admissible, or when the provider fails (partial output kept).
DecodeResult decode(std::string_view topic, const LanguageModel& provider,
                    const DecoderConfig& cfg, const Lexicon& lex);

// One JSON object per line: a header with topic, prompt, ph1, ph2, status,
// then one record per step {step, token, rank, reason, rejected}.
std::string trace_jsonl(const DecodeResult& result, const PhonemeTable& table,
                        bool include_rejections = false);

}  // namespace twister

#endif  // TWISTER_PACD_HPP
