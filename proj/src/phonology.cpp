#include "twister/phonology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "twister/errors.hpp"
#include "twister/text.hpp"

namespace twister {
namespace {

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double parse_weight(const std::string& field, const std::string& source, std::size_t line) {
  std::size_t used = 0;
  double w = 0.0;
  try {
    w = std::stod(field, &used);
  } catch (const std::exception&) {
    throw ParseError(source, line, "bad weight '" + field + "'");
  }
  if (used != field.size()) throw ParseError(source, line, "bad weight '" + field + "'");
  if (!(w >= 0.0) || w == std::numeric_limits<double>::infinity()) {
    throw ParseError(source, line, "weights must be finite and non-negative");
  }
  return w;
}

FeatureValue parse_value(const std::string& field, const std::string& source, std::size_t line) {
  if (field == "+") return FeatureValue::kPlus;
  if (field == "-") return FeatureValue::kMinus;
  if (field == "0") return FeatureValue::kUnspecified;
  throw ParseError(source, line, "feature value must be +, - or 0, got '" + field + "'");
}

}  // namespace

std::string_view strip_stress(std::string_view code) {
  if (!code.empty() && code.back() >= '0' && code.back() <= '2') code.remove_suffix(1);
  return code;
}

int stress_of(std::string_view code) {
  if (!code.empty() && code.back() >= '0' && code.back() <= '2') return code.back() - '0';
  return -1;
}

PhonemeTable PhonemeTable::parse(std::istream& in, const std::string& source) {
  PhonemeTable table;
  bool have_header = false;
  bool have_weights = false;
  std::size_t weights_line = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    auto cols = split_on(line, '\t');
    if (!have_header) {
      if (cols.size() != 5) throw ParseError(source, lineno, "header needs 5 tab-separated columns");
      table.feature_names_ = split_on(cols[4], ',');
      for (const auto& f : table.feature_names_) {
        if (f.empty()) throw ParseError(source, lineno, "empty feature name");
      }
      have_header = true;
      continue;
    }
    if (cols[0] == "weights") {
      if (have_weights) throw ParseError(source, lineno, "duplicate weights row");
      if (cols.size() != 2) throw ParseError(source, lineno, "weights row needs 2 columns");
      auto fields = split_on(cols[1], ',');
      if (fields.size() != table.feature_names_.size()) {
        throw ParseError(source, lineno,
                         "expected " + std::to_string(table.feature_names_.size()) +
                             " weights, got " + std::to_string(fields.size()));
      }
      for (const auto& f : fields) table.weights_.push_back(parse_weight(f, source, lineno));
      have_weights = true;
      weights_line = lineno;
      continue;
    }
    if (cols.size() != 5) throw ParseError(source, lineno, "phoneme row needs 5 tab-separated columns");
    Phoneme p;
    p.ipa = cols[0];
    p.arpabet = cols[1];
    if (p.ipa.empty() || p.arpabet.empty()) throw ParseError(source, lineno, "empty phoneme symbol");
    if (stress_of(p.arpabet) >= 0) throw ParseError(source, lineno, "ARPABET code carries a stress digit");
    if (cols[2] == "consonant") {
      p.klass = PhonemeClass::kConsonant;
    } else if (cols[2] == "vowel") {
      p.klass = PhonemeClass::kVowel;
    } else {
      throw ParseError(source, lineno, "class must be consonant or vowel");
    }
    if (cols[3] == "yes") {
      p.word_initial_legal = true;
    } else if (cols[3] == "no") {
      p.word_initial_legal = false;
    } else {
      throw ParseError(source, lineno, "initial must be yes or no");
    }
    auto fields = split_on(cols[4], ',');
    if (fields.size() != table.feature_names_.size()) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(table.feature_names_.size()) +
                           " feature values, got " + std::to_string(fields.size()));
    }
    if (table.phonemes_.size() >= std::numeric_limits<std::uint16_t>::max()) {
      throw ParseError(source, lineno, "too many phonemes");
    }
    PhonemeId id{static_cast<std::uint16_t>(table.phonemes_.size())};
    if (!table.by_ipa_.emplace(p.ipa, id).second) {
      throw ParseError(source, lineno, "duplicate IPA symbol '" + p.ipa + "'");
    }
    if (!table.by_arpabet_.emplace(p.arpabet, id).second) {
      throw ParseError(source, lineno, "duplicate ARPABET code '" + p.arpabet + "'");
    }
    for (const auto& f : fields) table.rows_.push_back(parse_value(f, source, lineno));
    table.phonemes_.push_back(std::move(p));
  }
  if (!have_header) throw ParseError(source, lineno, "missing header row");
  if (!have_weights) throw ParseError(source, lineno, "missing weights row");
  if (table.phonemes_.empty()) throw ParseError(source, lineno, "no phoneme rows");
  if (std::none_of(table.weights_.begin(), table.weights_.end(), [](double w) { return w > 0; })) {
    throw ParseError(source, weights_line, "at least one weight must be positive");
  }
  table.finalize();
  return table;
}

PhonemeTable PhonemeTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature table " + path.string());
  return parse(in, path.string());
}

void PhonemeTable::finalize() {
  const std::size_t n = phonemes_.size();
  const std::size_t f = feature_names_.size();
  distances_.assign(n * n, 0.0);
  max_distance_ = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double d = 0.0;
      for (std::size_t i = 0; i < f; ++i) {
        auto x = rows_[a * f + i];
        auto y = rows_[b * f + i];
        if (x == y) continue;
        bool half = x == FeatureValue::kUnspecified || y == FeatureValue::kUnspecified;
        d += weights_[i] * (half ? 0.5 : 1.0);
      }
      distances_[a * n + b] = d;
      distances_[b * n + a] = d;
      max_distance_ = std::max(max_distance_, d);
    }
  }
  if (!indel_overridden_) indel_cost_ = max_distance_ / 2.0;
}

std::vector<PhonemeId> PhonemeTable::ids() const {
  std::vector<PhonemeId> out;
  out.reserve(phonemes_.size());
  for (std::size_t i = 0; i < phonemes_.size(); ++i) out.push_back({static_cast<std::uint16_t>(i)});
  return out;
}

std::span<const FeatureValue> PhonemeTable::feature_vector(PhonemeId id) const {
  const std::size_t f = feature_names_.size();
  if (id.index >= phonemes_.size()) throw InvalidInput("phoneme id out of range");
  return std::span<const FeatureValue>(rows_).subspan(id.index * f, f);
}

std::optional<PhonemeId> PhonemeTable::find_ipa(std::string_view ipa) const {
  auto it = by_ipa_.find(std::string(ipa));
  if (it == by_ipa_.end()) return std::nullopt;
  return it->second;
}

std::optional<PhonemeId> PhonemeTable::find_arpabet(std::string_view code) const {
  auto it = by_arpabet_.find(std::string(strip_stress(code)));
  if (it == by_arpabet_.end()) return std::nullopt;
  return it->second;
}

PhonemeId PhonemeTable::resolve(std::string_view symbol) const {
  if (auto id = find_ipa(symbol)) return *id;
  std::string upper(symbol);
  for (char& c : upper) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (auto id = find_arpabet(upper)) return *id;
  throw UnknownPhonemeError(std::string(symbol));
}

PhonemeTable PhonemeTable::with_weights(std::vector<double> weights) const {
  if (weights.size() != feature_names_.size()) throw InvalidInput("weight vector length mismatch");
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0); }) ||
      std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
    throw InvalidInput("weights must be non-negative with at least one positive");
  }
  PhonemeTable copy = *this;
  copy.weights_ = std::move(weights);
  copy.finalize();
  return copy;
}

PhonemeTable PhonemeTable::with_indel_cost(double cost) const {
  if (!(cost >= 0.0)) throw InvalidInput("indel cost must be non-negative");
  PhonemeTable copy = *this;
  copy.indel_cost_ = cost;
  copy.indel_overridden_ = true;
  return copy;
}

std::span<const FeatureValue> feature_vector(const PhonemeTable& table, std::string_view symbol) {
  return table.feature_vector(table.resolve(symbol));
}

double phoneme_distance(const PhonemeTable& table, PhonemeId a, PhonemeId b) {
  if (a.index >= table.size() || b.index >= table.size()) throw InvalidInput("phoneme id out of range");
  return table.distance(a, b);
}

double sequence_ped(const PhonemeTable& table, std::span<const PhonemeId> a,
                    std::span<const PhonemeId> b) {
  const double indel = table.indel_cost();
  // Single rolling row over b.
  std::vector<double> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<double>(j) * indel;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    double diag = row[0];
    row[0] = static_cast<double>(i) * indel;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      double up = row[j];
      double sub = diag + phoneme_distance(table, a[i - 1], b[j - 1]);
      row[j] = std::min({sub, up + indel, row[j - 1] + indel});
      diag = up;
    }
  }
  return row[b.size()];
}

PhonemeId nearest_phoneme(const PhonemeTable& table, PhonemeId target,
                          std::span<const PhonemeId> candidates) {
  if (candidates.empty()) throw InvalidInput("nearest_phoneme: empty candidate list");
  PhonemeId best = candidates.front();
  double best_d = phoneme_distance(table, target, best);
  for (auto c : candidates.subspan(1)) {
    double d = phoneme_distance(table, target, c);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

std::string arpabet_to_ipa(const PhonemeTable& table, std::string_view code) {
  auto id = table.find_arpabet(code);
  if (!id) throw UnknownPhonemeError(std::string(code));
  return table.phoneme(*id).ipa;
}

std::string ipa_to_arpabet(const PhonemeTable& table, std::string_view ipa) {
  auto id = table.find_ipa(ipa);
  if (!id) throw UnknownPhonemeError(std::string(ipa));
  return table.phoneme(*id).arpabet;
}

}  // namespace twister
