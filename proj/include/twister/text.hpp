#ifndef TWISTER_TEXT_HPP
#define TWISTER_TEXT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace twister {

using WordSet = std::unordered_set<std::string>;

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Strips leading and trailing characters that are not ASCII letters or
// digits. Internal apostrophes, hyphens and other bytes are kept.
std::string strip_punctuation(std::string_view token);

// Whitespace split followed by strip_punctuation; empty results are dropped.
// Case is preserved.
std::vector<std::string> tokenize(std::string_view text);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

// One token per line, blank lines and '#' comments skipped, lowercased.
WordSet read_word_set(std::istream& in);
WordSet load_word_set(const std::filesystem::path& path);
std::vector<std::string> load_word_list(const std::filesystem::path& path);

// Deterministic pseudo-random source. Draws are defined in terms of the raw
// 64-bit engine output so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace twister

#endif  // TWISTER_TEXT_HPP
