#include "twister/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>

#include "twister/errors.hpp"
#include "twister/text.hpp"

namespace twister {

EmbeddingTable EmbeddingTable::parse(std::istream& in, const std::string& source) {
  EmbeddingTable emb;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    auto numeric = [](const std::string& f) {
      return std::all_of(f.begin(), f.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (lineno == 1 && fields.size() == 2 && numeric(fields[0]) && numeric(fields[1])) {
      continue;
    }
    if (fields.size() < 2) throw ParseError(source, lineno, "vector line has no components");
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(fields[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[i].size() || !std::isfinite(x)) {
        throw ParseError(source, lineno, "bad vector component '" + fields[i] + "'");
      }
      v.push_back(x);
    }
    if (emb.dimension_ == 0) emb.dimension_ = v.size();
    if (v.size() != emb.dimension_) {
      throw ParseError(source, lineno,
                       "dimension " + std::to_string(v.size()) + " differs from " +
                           std::to_string(emb.dimension_));
    }
    emb.vectors_[to_lower(fields[0])] = std::move(v);
  }
  return emb;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings " + path.string());
  return parse(in, path.string());
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  auto it = vectors_.find(to_lower(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(std::string token, std::vector<double> vector) {
  if (vector.empty()) throw InvalidInput("empty embedding vector");
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_) throw InvalidInput("embedding dimension mismatch");
  vectors_[to_lower(token)] = std::move(vector);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine over vectors of different length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

WordInitialSet parse_word_initial_set(std::istream& in, const PhonemeTable& table,
                                      const std::string& source) {
  WordInitialSet wip;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    PhonemeId id;
    try {
      id = table.resolve(t);
    } catch (const UnknownPhonemeError& e) {
      throw ParseError(source, lineno, e.what());
    }
    const auto& p = table.phoneme(id);
    if (p.klass != PhonemeClass::kConsonant || !p.word_initial_legal) {
      throw ParseError(source, lineno, "'" + p.ipa + "' is not a word-initial consonant");
    }
    if (std::find(wip.begin(), wip.end(), id) != wip.end()) {
      throw ParseError(source, lineno, "duplicate phoneme '" + p.ipa + "'");
    }
    wip.push_back(id);
  }
  return wip;
}

WordInitialSet load_word_initial_set(const std::filesystem::path& path, const PhonemeTable& table) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open word-initial set " + path.string());
  return parse_word_initial_set(in, table, path.string());
}

TopicPhrase sample_topic(std::uint64_t seed, std::span<const std::string> modifiers,
                         std::span<const std::string> nouns) {
  if (modifiers.empty() || nouns.empty()) throw InvalidInput("sample_topic: empty word list");
  Rng rng(seed);
  // One draw over the cross product keeps the choice uniform over pairs.
  std::size_t k = rng.uniform_index(modifiers.size() * nouns.size());
  return {modifiers[k / nouns.size()], nouns[k % nouns.size()]};
}

PhonemeId secondary_phoneme(PhonemeId primary, const WordInitialSet& wip, const PhonemeTable& table) {
  std::vector<PhonemeId> rest;
  for (auto id : wip) {
    if (id != primary) rest.push_back(id);
  }
  if (rest.empty()) throw InvalidInput("word-initial set has no phoneme besides the primary");
  return nearest_phoneme(table, primary, rest);
}

std::pair<PhonemeId, PhonemeId> select_phoneme_pair(const WordInitialSet& wip, std::uint64_t seed,
                                                    const PhonemeTable& table) {
  if (wip.size() < 2) throw InvalidInput("word-initial set needs at least two phonemes");
  Rng rng(seed);
  PhonemeId ph1 = wip[rng.uniform_index(wip.size())];
  return {ph1, secondary_phoneme(ph1, wip, table)};
}

std::vector<double> embed_phrase(std::span<const std::string> tokens, const EmbeddingTable& emb) {
  std::vector<double> sum;
  std::size_t found = 0;
  for (const auto& t : tokens) {
    const auto* v = emb.find(t);
    if (!v) continue;
    if (sum.empty()) sum.assign(v->size(), 0.0);
    for (std::size_t i = 0; i < v->size(); ++i) sum[i] += (*v)[i];
    ++found;
  }
  if (found == 0) throw InvalidInput("embed_phrase: no token has a vector");
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

std::vector<ScoredWord> candidate_words(const Lexicon& lex, PhonemeId initial,
                                        std::string_view topic_phrase, const EmbeddingTable& emb,
                                        std::size_t n) {
  if (n == 0) throw InvalidInput("candidate_words: n must be positive");
  auto topic_vec = embed_phrase(split_whitespace(topic_phrase), emb);
  std::vector<ScoredWord> scored;
  for (const auto& word : lex.words_with_initial(initial)) {
    const auto* v = emb.find(word);
    if (!v) continue;
    scored.push_back({word, initial, cosine_similarity(topic_vec, *v)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredWord& a, const ScoredWord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

CandidateList build_candidate_list(const TopicPhrase& topic, const WordInitialSet& wip,
                                   const Lexicon& lex, const EmbeddingTable& emb, std::size_t n,
                                   std::uint64_t seed) {
  if (wip.size() < 2) throw InvalidInput("word-initial set needs at least two phonemes");
  Rng rng(seed);
  CandidateList list;
  list.topic = topic;
  list.seed = seed;
  list.ph1 = wip[rng.uniform_index(wip.size())];
  list.ph2 = secondary_phoneme(list.ph1, wip, lex.table());
  list.words = candidate_words(lex, list.ph1, topic.text(), emb, n);
  auto second = candidate_words(lex, list.ph2, topic.text(), emb, n);
  list.words.insert(list.words.end(), second.begin(), second.end());
  if (list.words.empty()) {
    throw InvalidInput("no candidate words for topic '" + topic.text() + "' with /" +
                       lex.table().phoneme(list.ph1).ipa + "/ and /" +
                       lex.table().phoneme(list.ph2).ipa + "/");
  }
  rng.shuffle(list.words);
  return list;
}

}  // namespace twister
