#ifndef TWISTER_PIPELINE_HPP
#define TWISTER_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twister/errors.hpp"
#include "twister/lexicon.hpp"
#include "twister/lm.hpp"
#include "twister/text.hpp"
#include "twister/vocab.hpp"

namespace twister {

// --- prompts ---------------------------------------------------------------

enum class PromptVariant { kA, kB, kRefine, kParaphrase, kTopicToTwister, kStyleTransfer };

std::string_view to_string(PromptVariant v);
// "A", "B", "refine", "paraphrase", "topic2twister", "styletransfer".
PromptVariant parse_prompt_variant(std::string_view name);

// Word lists for A and B, a single text for everything else.
using PromptPayload = std::variant<std::vector<std::string>, std::string>;

// Byte-exact template instantiation. Word lists are joined with ", ".
// The paraphrase variant returns the system message, a blank line, and the
// per-record user message.
std::string build_prompt(PromptVariant variant, const PromptPayload& payload);

extern const char* const kParaphraseSystemMessage;

// --- records ----------------------------------------------------------------

struct TwisterRecord {
  std::int64_t tt_id = 0;
  std::string topic;
  std::string source;
  std::string prompt_variant;  // "A", "B" or "human"
  std::string twister;
  std::optional<std::string> paraphrase;
  std::string twister_arpabet;
  std::string twister_ipa;

  bool operator==(const TwisterRecord&) const = default;
};

// One JSON object per line with snake_case keys. Reading validates the
// schema and rejects duplicate ids.
std::string record_to_json(const TwisterRecord& r);
TwisterRecord record_from_json(std::string_view line);
std::vector<TwisterRecord> read_records(std::istream& in, const std::string& source_name = "<records>");
void write_records(std::ostream& out, std::span<const TwisterRecord> records);

// Fills twister_arpabet and twister_ipa from the twister text.
void enrich_transcriptions(TwisterRecord& r, const Lexicon& lex);

// --- filters ----------------------------------------------------------------

struct ReferenceStats {
  double ppl_mean = 0.0;
  double ppl_std = 0.0;
  double phon_mean = 0.0;
  double phon_std = 0.0;
  std::string source_label;
};

enum class PhonemicMetric { kIped, kOped };

// Mean and sample standard deviation (n - 1) of PPL and the phonemic metric
// over reference texts. Texts whose metric is undefined are skipped for it.
ReferenceStats reference_stats(std::span<const std::string> texts, const LanguageModel& scorer,
                               const Lexicon& lex, PhonemicMetric metric, std::string label);

struct Removal {
  TwisterRecord record;
  std::string reason;
};

struct FilterResult {
  std::vector<TwisterRecord> kept;
  std::vector<Removal> removed;
};

// Raised when a stage cannot finish; carries what it had decided so far.
class StageFailure : public Error {
 public:
  StageFailure(const std::string& what, FilterResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const FilterResult& partial() const { return partial_; }

 private:
  FilterResult partial_;
};

double twister_perplexity(const LanguageModel& scorer, std::string_view text);

// Keep iff PPL <= ppl_mean + ppl_std.
FilterResult ppl_filter(std::span<const TwisterRecord> records, const LanguageModel& scorer,
                        const ReferenceStats& stats);

// Keep iff metric <= phon_mean + phon_std. Records whose metric cannot be
// computed are removed with the reason.
FilterResult phonemic_filter(std::span<const TwisterRecord> records, const Lexicon& lex,
                             const ReferenceStats& stats,
                             PhonemicMetric metric = PhonemicMetric::kIped);

// Order-insensitive similarity in [0, 100]: both strings lowercased, stripped
// of punctuation, tokens sorted and joined by single spaces, then
// 100 * (1 - indel / (|a| + |b|)) with indel the insert/delete-only edit
// distance over code points.
double token_sort_ratio(std::string_view a, std::string_view b);

// Single greedy pass in ascending id order: a record is removed when its
// ratio against any earlier kept record is strictly above `threshold`.
FilterResult dedup(std::span<const TwisterRecord> records, double threshold = 60.0);

// Removed iff any token (split on whitespace and punctuation, lowercased) is
// in the bank.
FilterResult profanity_filter(std::span<const TwisterRecord> records, const WordSet& bank);

// First record per topic (lowercased, whitespace collapsed) survives.
FilterResult dedup_topics(std::span<const TwisterRecord> records);

// --- pipeline ---------------------------------------------------------------

enum class Stage { kRefine, kPpl, kPhonemic, kDedup, kProfanity, kTopicDedup };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view name);
std::vector<Stage> default_stage_order();

struct StageReport {
  std::string name;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::size_t modified = 0;
  std::vector<std::pair<std::int64_t, std::string>> removals;
};

struct PipelineReport {
  std::size_t generated = 0;
  std::size_t skipped_topics = 0;
  std::vector<StageReport> stages;
  std::size_t output = 0;
  bool completed = true;
  std::string error;

  std::string to_json() const;
};

struct PipelineConfig {
  std::vector<Stage> stages = default_stage_order();
  ReferenceStats stats;
  double dedup_threshold = 60.0;
  PhonemicMetric phonemic_metric = PhonemicMetric::kIped;
  WordSet profanity_bank;
  GenerationParams generation;
  bool paraphrase = true;
};

// Topic-to-record generation settings.
struct GenerationPlan {
  std::size_t count = 10;
  std::uint64_t seed = 7;
  std::int64_t first_id = 1;
  std::vector<std::string> modifiers;
  std::vector<std::string> nouns;
  WordInitialSet wip;
  std::size_t bank_size = 10;
  double prompt_a_share = 11500.0 / 17500.0;
};

struct PipelineOutput {
  std::vector<TwisterRecord> records;
  PipelineReport report;
};

// Samples topics, builds candidate lists and asks the generator for one
// twister per topic. Topics whose banks are empty are skipped and counted.
std::vector<TwisterRecord> generate_records(const GenerationPlan& plan, const Lexicon& lex,
                                            const EmbeddingTable& emb, TextGenerator& generator,
                                            const GenerationParams& params,
                                            std::size_t* skipped_topics = nullptr);

// Runs the configured stages in order, then adds paraphrases (if enabled)
// and transcriptions. A failing stage stops the run; the report records how
// far it got and `records` holds the last complete stage's output.
PipelineOutput refine_records(std::vector<TwisterRecord> records, const PipelineConfig& config,
                              const Lexicon& lex, const LanguageModel& scorer,
                              TextGenerator& generator);

PipelineOutput run_pipeline(const GenerationPlan& plan, const PipelineConfig& config,
                            const Lexicon& lex, const EmbeddingTable& emb,
                            const LanguageModel& scorer, TextGenerator& generator);

// Deterministic stand-in for the remote generator. Twister prompts (A, B,
// topic) return the canned texts in rotation, or the word list joined into a
// sentence when none are given; refinement returns the input twister; the
// paraphrase prompt returns a fixed prose rewording.
class StubGenerator : public TextGenerator {
 public:
  explicit StubGenerator(std::vector<std::string> canned = {});
  std::string generate(const std::string& prompt, const GenerationParams& params) override;
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::vector<std::string> canned_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

}  // namespace twister

#endif  // TWISTER_PIPELINE_HPP
