#ifndef TWISTER_TESTS_SUPPORT_HPP
#define TWISTER_TESTS_SUPPORT_HPP

#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "twister/lexicon.hpp"
#include "twister/lm.hpp"
#include "twister/phonology.hpp"
#include "twister/text.hpp"
#include "twister/vocab.hpp"

namespace testing {

inline std::string data_path(const std::string& rel) { return std::string(TWISTER_DATA_DIR) + "/" + rel; }

inline std::shared_ptr<const twister::PhonemeTable> table() {
  static auto t = std::make_shared<const twister::PhonemeTable>(
      twister::PhonemeTable::load(data_path("phonology/features.tsv")));
  return t;
}

inline const twister::Lexicon& lexicon() {
  static const twister::Lexicon lex = [] {
    auto lts = twister::LetterToSound::load(data_path("g2p/fallback_rules.tsv"), *table());
    return twister::Lexicon::load(data_path("lexicon/cmudict.dict"), table(), std::move(lts));
  }();
  return lex;
}

inline const twister::WordInitialSet& wip() {
  static const auto w = twister::load_word_initial_set(data_path("phonology/wip.txt"), *table());
  return w;
}

inline twister::PhonemeId ph(const std::string& symbol) { return table()->resolve(symbol); }

inline std::vector<std::string> lines_of(const std::string& rel) {
  std::ifstream in(data_path(rel));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Serves a fixed ranked list per context length; scores are uniform.
class ScriptedModel : public twister::LanguageModel {
 public:
  explicit ScriptedModel(std::vector<std::vector<std::string>> steps, std::size_t prompt_tokens)
      : steps_(std::move(steps)), prompt_tokens_(prompt_tokens) {}

  std::vector<twister::TokenCandidate> next_tokens(std::span<const std::string> context,
                                                   int top_k) const override {
    std::size_t step = context.size() - prompt_tokens_;
    std::vector<twister::TokenCandidate> out;
    if (step >= steps_.size()) return out;
    for (std::size_t i = 0; i < steps_[step].size() && i < static_cast<std::size_t>(top_k); ++i) {
      out.push_back({steps_[step][i], -static_cast<double>(i + 1), static_cast<int>(i + 1)});
    }
    return out;
  }

  std::vector<double> score(std::span<const std::string> tokens) const override {
    return std::vector<double>(tokens.size() + 1, 0.0);
  }

 private:
  std::vector<std::vector<std::string>> steps_;
  std::size_t prompt_tokens_;
};

}  // namespace testing

#endif  // TWISTER_TESTS_SUPPORT_HPP
