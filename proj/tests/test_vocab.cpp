#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "twister/errors.hpp"
#include "twister/vocab.hpp"

using namespace twister;
using testing::lexicon;
using testing::ph;

namespace {

const EmbeddingTable& vectors() {
  static const auto e = EmbeddingTable::load(testing::data_path("embeddings/toy_vectors.txt"));
  return e;
}

EmbeddingTable tiny() {
  std::istringstream in(
      "4 2\n"
      "fun 1 0\n"
      "fog 0.9 0.1\n"
      "vat 0.2 0.9\n"
      "fig 0.9 0.1\n");
  return EmbeddingTable::parse(in, "tiny.vec");
}

}  // namespace

TEST_CASE("embedding parsing") {
  auto e = tiny();
  CHECK(e.dimension() == 2);
  CHECK(e.size() == 4);
  CHECK(e.find("FUN") != nullptr);
  std::istringstream ragged("a 1 2\nb 1\n");
  CHECK_THROWS_AS(EmbeddingTable::parse(ragged), ParseError);
  std::istringstream bad("a 1 x\n");
  CHECK_THROWS_AS(EmbeddingTable::parse(bad), ParseError);
}

TEST_CASE("cosine similarity") {
  std::vector<double> a = {1, 0}, b = {0, 2}, c = {3, 0}, z = {0, 0};
  CHECK(cosine_similarity(a, b) == 0.0);
  CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, z) == 0.0);
  std::vector<double> d = {1, 1};
  CHECK(cosine_similarity(a, d) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("word-initial set validation") {
  const auto& t = *testing::table();
  std::istringstream ok("# consonants\np\nB\nf\n");
  auto w = parse_word_initial_set(ok, t);
  REQUIRE(w.size() == 3);
  CHECK(w[1] == ph("b"));
  std::istringstream vowel("p\ni\n");
  CHECK_THROWS_AS(parse_word_initial_set(vowel, t), ParseError);
  std::istringstream zh("ʒ\n");
  CHECK_THROWS_AS(parse_word_initial_set(zh, t), ParseError);
  std::istringstream dup("p\np\n");
  CHECK_THROWS_AS(parse_word_initial_set(dup, t), ParseError);
  for (auto id : testing::wip()) {
    CHECK(t.phoneme(id).klass == PhonemeClass::kConsonant);
    CHECK(t.phoneme(id).word_initial_legal);
  }
}

TEST_CASE("topic sampling is seeded and uniform over pairs") {
  std::vector<std::string> mods = {"rural", "happy"};
  std::vector<std::string> nouns = {"brewery", "sea", "fun"};
  CHECK(sample_topic(3, mods, nouns).text() == sample_topic(3, mods, nouns).text());
  std::map<std::string, int> seen;
  for (std::uint64_t s = 0; s < 6000; ++s) ++seen[sample_topic(s, mods, nouns).text()];
  CHECK(seen.size() == 6);
  for (const auto& [_, n] : seen) CHECK(std::abs(n - 1000) < 150);
  CHECK_THROWS_AS(sample_topic(1, {}, nouns), InvalidInput);
}

TEST_CASE("phoneme pair") {
  const auto& t = *testing::table();
  CHECK(secondary_phoneme(ph("f"), testing::wip(), t) == ph("v"));
  CHECK(secondary_phoneme(ph("b"), testing::wip(), t) == ph("p"));
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto [a, b] = select_phoneme_pair(testing::wip(), s, t);
    CHECK(a != b);
    CHECK(b == secondary_phoneme(a, testing::wip(), t));
  }
}

TEST_CASE("candidate words are ranked by similarity then alphabetically") {
  auto e = tiny();
  std::istringstream dict("fun F AH1 N\nfog F AA1 G\nfig F IH1 G\nvat V AE1 T\n");
  std::istringstream rules("f\tF\n");
  auto lex = Lexicon::parse(dict, testing::table(), LetterToSound::parse(rules, *testing::table()));
  auto words = candidate_words(lex, ph("f"), "fun", e, 5);
  REQUIRE(words.size() == 3);
  CHECK(words[0].token == "fun");
  CHECK(words[1].token == "fig");  // ties with fog
  CHECK(words[2].token == "fog");
  CHECK(candidate_words(lex, ph("f"), "fun", e, 1).size() == 1);
  CHECK_THROWS_AS(candidate_words(lex, ph("f"), "zzz", e, 3), InvalidInput);
}

TEST_CASE("candidate lists respect the phoneme pair and bank size") {
  const auto& lex = lexicon();
  TopicPhrase topic{"rural", "brewery"};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto list = build_candidate_list(topic, testing::wip(), lex, vectors(), 5, seed);
    std::size_t first = 0, second = 0;
    for (const auto& w : list.words) {
      CHECK(std::isfinite(w.score));
      auto initial = lex.find(w.token)->pronunciations[0][0].id;
      CHECK(initial == w.initial);
      CHECK((initial == list.ph1 || initial == list.ph2));
      (initial == list.ph1 ? first : second)++;
    }
    CHECK(first <= 5);
    CHECK(second <= 5);
    auto again = build_candidate_list(topic, testing::wip(), lex, vectors(), 5, seed);
    REQUIRE(again.words.size() == list.words.size());
    for (std::size_t i = 0; i < list.words.size(); ++i) CHECK(again.words[i].token == list.words[i].token);
    CHECK(list.ph1 == select_phoneme_pair(testing::wip(), seed, lex.table()).first);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
  CHECK_THROWS_AS(rng.uniform_index(0), InvalidInput);
}
