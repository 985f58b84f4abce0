#include "twister/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "twister/errors.hpp"
#include "twister/text.hpp"

namespace twister {

PhonemeSequence phonemes_of(std::span<const Phone> phones) {
  PhonemeSequence out;
  out.reserve(phones.size());
  for (const auto& p : phones) out.push_back(p.id);
  return out;
}

LetterToSound LetterToSound::parse(std::istream& in, const PhonemeTable& table,
                                   const std::string& source) {
  LetterToSound lts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(source, lineno, "expected grapheme<TAB>phonemes");
    }
    std::string grapheme = to_lower(line.substr(0, tab));
    Pronunciation phones;
    for (const auto& code : split_whitespace(line.substr(tab + 1))) {
      auto id = table.find_arpabet(code);
      if (!id) throw ParseError(source, lineno, "unknown ARPABET symbol '" + code + "'");
      phones.push_back({*id, stress_of(code)});
    }
    if (phones.empty()) throw ParseError(source, lineno, "rule has no phonemes");
    if (!lts.rules_.emplace(grapheme, std::move(phones)).second) {
      throw ParseError(source, lineno, "duplicate rule for '" + grapheme + "'");
    }
    lts.longest_ = std::max(lts.longest_, grapheme.size());
  }
  return lts;
}

LetterToSound LetterToSound::load(const std::filesystem::path& path, const PhonemeTable& table) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open letter-to-sound rules " + path.string());
  return parse(in, table, path.string());
}

Pronunciation LetterToSound::apply(std::string_view word) const {
  Pronunciation out;
  std::size_t i = 0;
  while (i < word.size()) {
    bool matched = false;
    for (std::size_t len = std::min(longest_, word.size() - i); len > 0; --len) {
      auto it = rules_.find(std::string(word.substr(i, len)));
      if (it != rules_.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

Lexicon::Lexicon(std::shared_ptr<const PhonemeTable> table, LetterToSound fallback)
    : table_(std::move(table)), fallback_(std::move(fallback)) {
  if (!table_) throw InvalidInput("lexicon needs a phoneme table");
  initial_index_.assign(table_->size(), {});
}

Lexicon Lexicon::parse(std::istream& in, std::shared_ptr<const PhonemeTable> table,
                       LetterToSound fallback, const std::string& source) {
  Lexicon lex(std::move(table), std::move(fallback));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty() || view.starts_with(";;;")) continue;
    if (auto hash = view.find(" #"); hash != std::string_view::npos) view = trim(view.substr(0, hash));
    auto fields = split_whitespace(view);
    if (fields.size() < 2) throw ParseError(source, lineno, "malformed entry (no pronunciation)");
    std::string head = to_lower(fields[0]);
    if (head.size() > 3 && head.back() == ')') {
      auto open = head.rfind('(');
      if (open != std::string::npos && open > 0 &&
          std::all_of(head.begin() + static_cast<long>(open) + 1, head.end() - 1,
                      [](char c) { return c >= '0' && c <= '9'; }) &&
          open + 2 < head.size()) {
        head.resize(open);
      }
    }
    Pronunciation pron;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto id = lex.table_->find_arpabet(fields[i]);
      if (!id) throw ParseError(source, lineno, "unknown ARPABET symbol '" + fields[i] + "'");
      pron.push_back({*id, stress_of(fields[i])});
    }
    auto& entry = lex.entries_[head];
    if (entry.headword.empty()) entry.headword = head;
    entry.pronunciations.push_back(std::move(pron));
  }
  lex.build_index();
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path, std::shared_ptr<const PhonemeTable> table,
                      LetterToSound fallback) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return parse(in, std::move(table), std::move(fallback), path.string());
}

void Lexicon::build_index() {
  initial_index_.assign(table_->size(), {});
  for (const auto& [head, entry] : entries_) {
    const auto& primary = entry.pronunciations.front();
    initial_index_[primary.front().id.index].push_back(head);
  }
  for (auto& words : initial_index_) std::sort(words.begin(), words.end());
}

const LexiconEntry* Lexicon::find(std::string_view word) const {
  auto it = entries_.find(to_lower(word));
  return it == entries_.end() ? nullptr : &it->second;
}

std::span<const std::string> Lexicon::words_with_initial(PhonemeId initial) const {
  if (initial.index >= initial_index_.size()) return {};
  return initial_index_[initial.index];
}

std::vector<std::string> Lexicon::headwords() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [head, entry] : entries_) out.push_back(head);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Transcription::phoneme_count() const {
  std::size_t n = 0;
  for (const auto& w : words) n += w.phones.size();
  return n;
}

PhonemeSequence Transcription::flattened() const {
  PhonemeSequence out;
  for (const auto& w : words) {
    for (const auto& p : w.phones) out.push_back(p.id);
  }
  return out;
}

PhonemeSequence Transcription::initials() const {
  PhonemeSequence out;
  for (const auto& w : words) {
    if (!w.phones.empty()) out.push_back(w.phones.front().id);
  }
  return out;
}

namespace {

// Lexicon lookup on a normalized lowercase token, then hyphen splitting, then
// the rule fallback. Returns the phones and whether any part was OOV.
std::pair<Pronunciation, bool> transcribe_normalized(const std::string& key, const Lexicon& lex) {
  if (const auto* e = lex.find(key)) return {e->pronunciations.front(), false};
  if (key.find('-') != std::string::npos) {
    Pronunciation all;
    bool oov = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= key.size(); ++i) {
      if (i == key.size() || key[i] == '-') {
        std::string part = strip_punctuation(std::string_view(key).substr(start, i - start));
        start = i + 1;
        if (part.empty()) continue;
        auto [phones, part_oov] = transcribe_normalized(part, lex);
        all.insert(all.end(), phones.begin(), phones.end());
        oov = oov || part_oov;
      }
    }
    if (!all.empty()) return {all, oov};
  }
  return {lex.fallback().apply(key), true};
}

bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

}  // namespace

TranscribedWord transcribe_word(std::string_view token, const Lexicon& lex) {
  TranscribedWord out;
  out.token = strip_punctuation(token);
  if (out.token.empty()) {
    throw InvalidInput("token '" + std::string(token) + "' has no letters or digits");
  }
  if (const auto* e = lex.find(token)) {
    out.phones = e->pronunciations.front();
    return out;
  }
  auto [phones, oov] = transcribe_normalized(to_lower(out.token), lex);
  if (phones.empty()) throw InvalidInput("no pronunciation derivable for '" + out.token + "'");
  out.phones = std::move(phones);
  out.oov = oov;
  return out;
}

Transcription transcribe_text(std::string_view text, const Lexicon& lex) {
  Transcription t;
  for (const auto& raw : split_whitespace(text)) {
    if (strip_punctuation(raw).empty()) continue;
    t.words.push_back(transcribe_word(raw, lex));
  }
  return t;
}

std::string render_arpabet(const Transcription& t, const PhonemeTable& table) {
  std::string out;
  for (std::size_t w = 0; w < t.words.size(); ++w) {
    if (w) out += "  ";
    const auto& phones = t.words[w].phones;
    for (std::size_t i = 0; i < phones.size(); ++i) {
      if (i) out += ' ';
      out += table.phoneme(phones[i].id).arpabet;
      if (phones[i].stress >= 0) out += static_cast<char>('0' + phones[i].stress);
    }
  }
  return out;
}

std::string render_ipa(const Transcription& t, const PhonemeTable& table) {
  std::string out;
  for (std::size_t w = 0; w < t.words.size(); ++w) {
    if (w) out += ' ';
    for (const auto& p : t.words[w].phones) out += table.phoneme(p.id).ipa;
  }
  return out;
}

int syllable_count(std::string_view token, const Lexicon& lex) {
  std::string norm = to_lower(strip_punctuation(token));
  if (norm.empty()) return 1;
  int vowels = 0;
  try {
    for (const auto& p : transcribe_word(token, lex).phones) {
      if (lex.table().phoneme(p.id).klass == PhonemeClass::kVowel) ++vowels;
    }
  } catch (const InvalidInput&) {
    vowels = 0;
  }
  if (vowels == 0) {
    bool in_group = false;
    for (char c : norm) {
      bool v = is_vowel_letter(c);
      if (v && !in_group) ++vowels;
      in_group = v;
    }
  }
  return std::max(vowels, 1);
}

}  // namespace twister
