#ifndef TWISTER_PHONOLOGY_HPP
#define TWISTER_PHONOLOGY_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace twister {

// Index of a phoneme inside a PhonemeTable. Row order of the table file.
struct PhonemeId {
  std::uint16_t index = 0;
  auto operator<=>(const PhonemeId&) const = default;
};

using PhonemeSequence = std::vector<PhonemeId>;

enum class PhonemeClass { kConsonant, kVowel };

enum class FeatureValue : std::int8_t { kMinus = -1, kUnspecified = 0, kPlus = 1 };

struct Phoneme {
  std::string ipa;
  std::string arpabet;  // no stress digit
  PhonemeClass klass = PhonemeClass::kConsonant;
  bool word_initial_legal = false;
};

// Phoneme inventory with ternary feature rows and per-feature weights.
//
// File format (UTF-8, '#' comment lines):
//   ipa<TAB>arpabet<TAB>class<TAB>initial<TAB>feat1,feat2,...   header row
//   weights<TAB>w1,w2,...                                       weights row
//   t<TAB>T<TAB>consonant<TAB>yes<TAB>-,-,+,...                 one per phoneme
//
// The weights row may appear anywhere after the header. Row order is the
// canonical iteration order, which nearest_phoneme uses to break ties.
class PhonemeTable {
 public:
  static PhonemeTable parse(std::istream& in, const std::string& source_name = "<features>");
  static PhonemeTable load(const std::filesystem::path& path);

  std::size_t size() const { return phonemes_.size(); }
  std::vector<PhonemeId> ids() const;
  const Phoneme& phoneme(PhonemeId id) const { return phonemes_.at(id.index); }

  std::span<const std::string> feature_names() const { return feature_names_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const FeatureValue> feature_vector(PhonemeId id) const;

  std::optional<PhonemeId> find_ipa(std::string_view ipa) const;
  // Accepts stress-marked codes ("ER0"); case-sensitive upper-case ARPABET.
  std::optional<PhonemeId> find_arpabet(std::string_view code) const;
  // IPA first, then ARPABET (case-insensitive). Throws UnknownPhonemeError.
  PhonemeId resolve(std::string_view symbol) const;

  // Pairwise substitution cost, precomputed at construction.
  double distance(PhonemeId a, PhonemeId b) const {
    return distances_[static_cast<std::size_t>(a.index) * phonemes_.size() + b.index];
  }
  double max_distance() const { return max_distance_; }

  // Cost of inserting or deleting one phoneme in sequence alignment.
  // Defaults to half of max_distance().
  double indel_cost() const { return indel_cost_; }

  // Copy of this table with a different weight vector (same length).
  PhonemeTable with_weights(std::vector<double> weights) const;
  PhonemeTable with_indel_cost(double cost) const;

 private:
  void finalize();

  std::vector<std::string> feature_names_;
  std::vector<double> weights_;
  std::vector<Phoneme> phonemes_;
  std::vector<FeatureValue> rows_;  // size() * feature count, row-major
  std::unordered_map<std::string, PhonemeId> by_ipa_;
  std::unordered_map<std::string, PhonemeId> by_arpabet_;
  std::vector<double> distances_;
  double max_distance_ = 0.0;
  double indel_cost_ = 0.0;
  bool indel_overridden_ = false;
};

// Returns the stored feature row for an IPA or ARPABET symbol.
std::span<const FeatureValue> feature_vector(const PhonemeTable& table, std::string_view symbol);

// Weighted feature distance: sum of w_i * d_i with d_i = 0 for equal values,
// 1 for a +/- disagreement and 0.5 when exactly one side is unspecified.
double phoneme_distance(const PhonemeTable& table, PhonemeId a, PhonemeId b);

// Weighted edit distance between phoneme sequences: substitutions cost
// phoneme_distance, insertions and deletions cost table.indel_cost().
double sequence_ped(const PhonemeTable& table, std::span<const PhonemeId> a,
                    std::span<const PhonemeId> b);

// The candidate with the smallest distance to target. Ties go to the
// earliest candidate in list order. Throws InvalidInput on an empty list.
PhonemeId nearest_phoneme(const PhonemeTable& table, PhonemeId target,
                          std::span<const PhonemeId> candidates);

std::string arpabet_to_ipa(const PhonemeTable& table, std::string_view code);
std::string ipa_to_arpabet(const PhonemeTable& table, std::string_view ipa);

// "ER1" -> "ER"; codes without a trailing 0/1/2 are returned unchanged.
std::string_view strip_stress(std::string_view code);
// Trailing stress digit, or -1 if none.
int stress_of(std::string_view code);

}  // namespace twister

#endif  // TWISTER_PHONOLOGY_HPP
