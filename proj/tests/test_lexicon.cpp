#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "twister/errors.hpp"
#include "twister/lexicon.hpp"

using namespace twister;
using testing::lexicon;
using testing::table;

namespace {

LetterToSound small_rules() {
  std::istringstream in("# rules\nsh\tSH\ns\tS\nh\tHH\ni\tIH\np\tP\nx\tK S\n");
  return LetterToSound::parse(in, *table(), "rules.tsv");
}

Lexicon small_lexicon(const std::string& body) {
  std::istringstream in(body);
  return Lexicon::parse(in, table(), small_rules(), "mini.dict");
}

std::string arpa(const Lexicon& lex, std::string_view text) {
  return render_arpabet(transcribe_text(text, lex), lex.table());
}

}  // namespace

TEST_CASE("Hello World renders with double-space word delimiting") {
  const auto& lex = lexicon();
  auto t = transcribe_text("Hello World", lex);
  REQUIRE(t.words.size() == 2);
  CHECK(render_arpabet(t, lex.table()) == "HH AH0 L OW1  W ER1 L D");
  CHECK(render_ipa(t, lex.table()) == "hʌloʊ wɝld");
  CHECK_FALSE(t.words[0].oov);
  CHECK(t.words[0].token == "Hello");
}

TEST_CASE("CMUdict syntax: variants, comments and annotations") {
  auto lex = small_lexicon(
      ";;; comment line\n"
      "read R EH1 D\n"
      "read(2) R IY1 D\n"
      "live L IH1 V # verb\n"
      "LIVE(2) L AY1 V\n");
  CHECK(lex.size() == 2);
  const auto* read = lex.find("READ");
  REQUIRE(read);
  REQUIRE(read->pronunciations.size() == 2);
  CHECK(arpa(lex, "read") == "R EH1 D");
  CHECK(lex.find("live")->pronunciations.size() == 2);
  CHECK(arpa(lex, "live") == "L IH1 V");
}

TEST_CASE("lexicon parse errors carry the line") {
  try {
    small_lexicon("good G UH1 D\nbad B QQ1 D\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(small_lexicon("lonely\n"), ParseError);
}

TEST_CASE("out-of-vocabulary words use longest-match rules") {
  auto lex = small_lexicon("ship SH IH1 P\n");
  auto w = transcribe_word("shish", lex);
  CHECK(render_arpabet(Transcription{{transcribe_word("hips", lex)}}, lex.table()) == "HH IH P S");
  CHECK(w.oov);
  CHECK(render_arpabet(Transcription{{w}}, lex.table()) == "SH IH SH");
  CHECK_FALSE(transcribe_word("ship", lex).oov);
  CHECK_THROWS_AS(transcribe_word("!!", lex), InvalidInput);
}

TEST_CASE("hyphenated words are transcribed part by part") {
  auto lex = small_lexicon("ship SH IH1 P\nsip S IH1 P\n");
  auto w = transcribe_word("ship-sip", lex);
  CHECK_FALSE(w.oov);
  CHECK(w.phones.size() == 6);
}

TEST_CASE("edge punctuation is stripped and pure punctuation skipped") {
  const auto& lex = lexicon();
  auto t = transcribe_text("\"Peter, Piper -- picks!\"", lex);
  REQUIRE(t.words.size() == 3);
  CHECK(t.words[0].token == "Peter");
  CHECK(t.words[2].token == "picks");
  CHECK(transcribe_text("", lex).empty());
}

TEST_CASE("initials and flattening") {
  const auto& lex = lexicon();
  auto t = transcribe_text("big dog", lex);
  auto initials = t.initials();
  REQUIRE(initials.size() == 2);
  CHECK(lex.table().phoneme(initials[0]).ipa == "b");
  CHECK(lex.table().phoneme(initials[1]).ipa == "d");
  CHECK(t.flattened().size() == t.phoneme_count());
  CHECK(t.phoneme_count() == 6);
}

TEST_CASE("words_with_initial is sorted and consistent") {
  const auto& lex = lexicon();
  auto f = testing::ph("f");
  auto words = lex.words_with_initial(f);
  CHECK(words.size() > 1000);
  CHECK(std::is_sorted(words.begin(), words.end()));
  for (std::size_t i = 0; i < words.size(); i += 97) {
    CHECK(lex.find(words[i])->pronunciations[0][0].id == f);
  }
}

TEST_CASE("syllable counts") {
  const auto& lex = lexicon();
  CHECK(syllable_count("cat", lex) == 1);
  CHECK(syllable_count("hello", lex) == 2);
  CHECK(syllable_count("beautiful", lex) == 3);
  CHECK(syllable_count("Strengths", lex) == 1);
}

TEST_CASE("ARPABET words line up with text tokens") {
  const auto& lex = lexicon();
  for (const auto& line : testing::lines_of("reference/classic_twisters.txt")) {
    auto rendered = arpa(lex, line);
    CHECK(rendered.find("   ") == std::string::npos);
    std::size_t words = 1;
    for (auto pos = rendered.find("  "); pos != std::string::npos; pos = rendered.find("  ", pos + 2)) {
      ++words;
    }
    CHECK(words == transcribe_text(line, lex).words.size());
  }
}
