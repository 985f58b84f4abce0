#ifndef TWISTER_METRICS_HPP
#define TWISTER_METRICS_HPP

#include <optional>
#include <string>
#include <string_view>

#include "twister/lexicon.hpp"
#include "twister/phonology.hpp"
#include "twister/text.hpp"

namespace twister {

// Unique phonemes over total phonemes. Stress is ignored. Lower means more
// overlap; 1 is the worst score.
double po(const Transcription& t);

// Unique word-initial phonemes over word count.
double init_po(const Transcription& t);

// Mean phoneme distance between consecutive word-initial phonemes
// (n - 1 transitions for n words). Requires at least two words.
double iped(const Transcription& t, const PhonemeTable& table);

// Mean phoneme distance between adjacent phonemes in reading order, across
// word boundaries. Requires at least two phonemes.
double oped(const Transcription& t, const PhonemeTable& table);

enum class ReadabilityIndex { kDaleChall, kFleschKincaid, kGunningFog, kAri };

std::string_view to_string(ReadabilityIndex index);
ReadabilityIndex parse_readability_index(std::string_view name);

// Surface counts shared by the readability formulas.
struct TextCounts {
  int words = 0;
  int sentences = 0;
  int characters = 0;  // ASCII letters and digits inside words
  int syllables = 0;
  int complex_words = 0;  // three or more syllables
  int difficult_words = 0;  // not on the familiar list; 0 without a list
};

// Sentences are runs of text ending in . ! or ?; trailing text without a
// terminator counts as one more sentence.
TextCounts count_text(std::string_view text, const Lexicon& lex, const WordSet* familiar = nullptr);

// Grade-level forms:
//   ARI           4.71 c/w + 0.5 w/s - 21.43
//   Gunning-Fog   0.4 (w/s + 100 complex/w)
//   Flesch-Kincaid 0.39 w/s + 11.8 syl/w - 15.59
//   Dale-Chall    0.1579 pct_difficult + 0.0496 w/s, +3.6365 if pct_difficult > 5
// Dale-Chall throws InvalidInput when `familiar` is null.
double readability(std::string_view text, const Lexicon& lex, ReadabilityIndex index,
                   const WordSet* familiar = nullptr);

struct MetricReport {
  std::string id;
  int word_count = 0;
  int phoneme_count = 0;
  double po = 0.0;
  double init_po = 0.0;
  std::optional<double> iped;  // absent for single-word texts
  std::optional<double> oped;  // absent for single-phoneme texts
  double re_dale_chall = 0.0;
  double re_flesch_kincaid = 0.0;
  double re_gunning_fog = 0.0;
  double re_ari = 0.0;
  bool has_dale_chall = false;
};

MetricReport compute_report(std::string id, std::string_view text, const Lexicon& lex,
                            const WordSet* familiar = nullptr);

// Fixed field order:
// id,word_count,phoneme_count,po,init_po,iped,oped,re_dale_chall,
// re_flesch_kincaid,re_gunning_fog,re_ari
std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);
std::string report_json(const MetricReport& r);

}  // namespace twister

#endif  // TWISTER_METRICS_HPP
