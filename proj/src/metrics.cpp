#include "twister/metrics.hpp"

#include <cstdio>
#include <set>

#include "json.hpp"

#include "twister/errors.hpp"

namespace twister {

double po(const Transcription& t) {
  auto all = t.flattened();
  if (all.empty()) throw InvalidInput("po: transcription has no phonemes");
  std::set<PhonemeId> unique(all.begin(), all.end());
  return static_cast<double>(unique.size()) / static_cast<double>(all.size());
}

double init_po(const Transcription& t) {
  auto initials = t.initials();
  if (initials.empty()) throw InvalidInput("init_po: transcription has no words");
  std::set<PhonemeId> unique(initials.begin(), initials.end());
  return static_cast<double>(unique.size()) / static_cast<double>(initials.size());
}

namespace {

double mean_transition(const PhonemeSequence& seq, const PhonemeTable& table) {
  double sum = 0.0;
  for (std::size_t i = 1; i < seq.size(); ++i) sum += phoneme_distance(table, seq[i - 1], seq[i]);
  return sum / static_cast<double>(seq.size() - 1);
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double iped(const Transcription& t, const PhonemeTable& table) {
  auto initials = t.initials();
  if (initials.size() < 2) throw InvalidInput("iped needs at least two words");
  return mean_transition(initials, table);
}

double oped(const Transcription& t, const PhonemeTable& table) {
  auto all = t.flattened();
  if (all.size() < 2) throw InvalidInput("oped needs at least two phonemes");
  return mean_transition(all, table);
}

std::string_view to_string(ReadabilityIndex index) {
  switch (index) {
    case ReadabilityIndex::kDaleChall: return "dale_chall";
    case ReadabilityIndex::kFleschKincaid: return "flesch_kincaid";
    case ReadabilityIndex::kGunningFog: return "gunning_fog";
    case ReadabilityIndex::kAri: return "ari";
  }
  return "unknown";
}

ReadabilityIndex parse_readability_index(std::string_view name) {
  for (auto idx : {ReadabilityIndex::kDaleChall, ReadabilityIndex::kFleschKincaid,
                   ReadabilityIndex::kGunningFog, ReadabilityIndex::kAri}) {
    if (to_string(idx) == name) return idx;
  }
  throw InvalidInput("unknown readability index '" + std::string(name) + "'");
}

TextCounts count_text(std::string_view text, const Lexicon& lex, const WordSet* familiar) {
  TextCounts c;
  bool open_sentence = false;
  for (const auto& raw : split_whitespace(text)) {
    std::string word = strip_punctuation(raw);
    if (!word.empty()) {
      ++c.words;
      open_sentence = true;
      for (char ch : word) c.characters += is_alnum(ch) ? 1 : 0;
      int syl = syllable_count(word, lex);
      c.syllables += syl;
      if (syl >= 3) ++c.complex_words;
      if (familiar && !familiar->contains(to_lower(word))) ++c.difficult_words;
    }
    // Terminators count only in the tail after the word's last letter or digit.
    std::size_t tail = raw.size();
    while (tail > 0 && !is_alnum(raw[tail - 1])) --tail;
    bool ends = false;
    for (std::size_t i = tail; i < raw.size(); ++i) ends = ends || is_terminator(raw[i]);
    if (ends && open_sentence) {
      ++c.sentences;
      open_sentence = false;
    }
  }
  if (open_sentence) ++c.sentences;
  return c;
}

double readability(std::string_view text, const Lexicon& lex, ReadabilityIndex index,
                   const WordSet* familiar) {
  if (index == ReadabilityIndex::kDaleChall && familiar == nullptr) {
    throw InvalidInput("Dale-Chall needs a familiar-word list");
  }
  TextCounts c = count_text(text, lex, familiar);
  if (c.words == 0) throw InvalidInput("readability: text has no words");
  const double w = c.words;
  const double wps = w / c.sentences;
  switch (index) {
    case ReadabilityIndex::kAri:
      return 4.71 * (c.characters / w) + 0.5 * wps - 21.43;
    case ReadabilityIndex::kGunningFog:
      return 0.4 * (wps + 100.0 * (c.complex_words / w));
    case ReadabilityIndex::kFleschKincaid:
      return 0.39 * wps + 11.8 * (c.syllables / w) - 15.59;
    case ReadabilityIndex::kDaleChall: {
      const double pct = 100.0 * c.difficult_words / w;
      double score = 0.1579 * pct + 0.0496 * wps;
      if (pct > 5.0) score += 3.6365;
      return score;
    }
  }
  throw InvalidInput("unknown readability index");
}

MetricReport compute_report(std::string id, std::string_view text, const Lexicon& lex,
                            const WordSet* familiar) {
  MetricReport r;
  r.id = std::move(id);
  Transcription t = transcribe_text(text, lex);
  if (t.empty()) throw InvalidInput("metrics: text '" + std::string(text) + "' has no words");
  const auto& table = lex.table();
  r.word_count = static_cast<int>(t.words.size());
  r.phoneme_count = static_cast<int>(t.phoneme_count());
  r.po = po(t);
  r.init_po = init_po(t);
  if (t.words.size() >= 2) r.iped = iped(t, table);
  if (t.phoneme_count() >= 2) r.oped = oped(t, table);
  if (familiar) {
    r.re_dale_chall = readability(text, lex, ReadabilityIndex::kDaleChall, familiar);
    r.has_dale_chall = true;
  }
  r.re_flesch_kincaid = readability(text, lex, ReadabilityIndex::kFleschKincaid);
  r.re_gunning_fog = readability(text, lex, ReadabilityIndex::kGunningFog);
  r.re_ari = readability(text, lex, ReadabilityIndex::kAri);
  return r;
}

std::string report_csv_header() {
  return "id,word_count,phoneme_count,po,init_po,iped,oped,re_dale_chall,re_flesch_kincaid,"
         "re_gunning_fog,re_ari";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv_row(const MetricReport& r) {
  std::string out = csv_field(r.id);
  out += ',' + std::to_string(r.word_count);
  out += ',' + std::to_string(r.phoneme_count);
  out += ',' + fmt(r.po);
  out += ',' + fmt(r.init_po);
  out += ',' + (r.iped ? fmt(*r.iped) : std::string());
  out += ',' + (r.oped ? fmt(*r.oped) : std::string());
  out += ',' + (r.has_dale_chall ? fmt(r.re_dale_chall) : std::string());
  out += ',' + fmt(r.re_flesch_kincaid);
  out += ',' + fmt(r.re_gunning_fog);
  out += ',' + fmt(r.re_ari);
  return out;
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["word_count"] = r.word_count;
  j["phoneme_count"] = r.phoneme_count;
  j["po"] = r.po;
  j["init_po"] = r.init_po;
  j["iped"] = r.iped ? nlohmann::ordered_json(*r.iped) : nlohmann::ordered_json(nullptr);
  j["oped"] = r.oped ? nlohmann::ordered_json(*r.oped) : nlohmann::ordered_json(nullptr);
  j["re_dale_chall"] =
      r.has_dale_chall ? nlohmann::ordered_json(r.re_dale_chall) : nlohmann::ordered_json(nullptr);
  j["re_flesch_kincaid"] = r.re_flesch_kincaid;
  j["re_gunning_fog"] = r.re_gunning_fog;
  j["re_ari"] = r.re_ari;
  return j.dump();
}

}  // namespace twister
