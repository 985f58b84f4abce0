#include "twister/pacd.hpp"

#include <algorithm>

#include "json.hpp"
#include "twister/errors.hpp"

namespace twister {

void DecoderConfig::validate() const {
  if (max_length < 1 || function_window < 1 || min_word_length < 1 || max_repetition < 1 ||
      scan_limit < 1) {
    throw InvalidInput("decoder bounds must all be at least 1");
  }
  if (function_words.empty()) throw InvalidInput("function word list is empty");
  if (dictionary && dictionary->empty()) throw InvalidInput("dictionary is empty");
  for (const auto& w : function_words) {
    if (w.empty() || strip_punctuation(w) != w ||
        std::any_of(w.begin(), w.end(), [](char c) { return c == '\'' || c == '-'; })) {
      throw InvalidInput("function word '" + w + "' contains punctuation");
    }
  }
  if (wip.size() < 2) throw InvalidInput("word-initial set needs at least two phonemes");
}

std::string_view to_string(AdmitKind kind) {
  switch (kind) {
    case AdmitKind::kFunction: return "function";
    case AdmitKind::kContent: return "content";
    case AdmitKind::kReject: return "reject";
  }
  return "unknown";
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "none";
    case RejectReason::kLength: return "length";
    case RejectReason::kDictionary: return "dictionary";
    case RejectReason::kRepetition: return "repetition";
    case RejectReason::kPhoneme: return "phoneme";
  }
  return "unknown";
}

std::string_view to_string(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::kComplete: return "complete";
    case DecodeStatus::kExhaustedVocabulary: return "exhausted_vocabulary";
    case DecodeStatus::kProviderError: return "provider_error";
  }
  return "unknown";
}

Admission admissible(const TokenCandidate& candidate, const DecodeState& state,
                     const DecoderConfig& cfg, const Lexicon& lex) {
  const std::string word = to_lower(candidate.token);
  if (cfg.function_words.contains(word) && candidate.rank <= cfg.function_window) {
    return {AdmitKind::kFunction, RejectReason::kNone};
  }
  if (utf8_length(word) < static_cast<std::size_t>(cfg.min_word_length)) {
    return {AdmitKind::kReject, RejectReason::kLength};
  }
  const bool in_dictionary = cfg.dictionary ? cfg.dictionary->contains(word) : lex.contains(word);
  if (!in_dictionary) return {AdmitKind::kReject, RejectReason::kDictionary};
  const auto seen = std::count_if(state.generated.begin(), state.generated.end(),
                                  [&](const std::string& g) { return to_lower(g) == word; });
  if (seen >= cfg.max_repetition) return {AdmitKind::kReject, RejectReason::kRepetition};
  try {
    auto phones = transcribe_word(candidate.token, lex).phones;
    if (!phones.empty() && (phones.front().id == state.ph1 || phones.front().id == state.ph2)) {
      return {AdmitKind::kContent, RejectReason::kNone};
    }
  } catch (const InvalidInput&) {
  }
  return {AdmitKind::kReject, RejectReason::kPhoneme};
}

std::pair<PhonemeId, PhonemeId> pick_target_phonemes(std::string_view topic,
                                                     const WordInitialSet& wip, const Lexicon& lex,
                                                     std::uint64_t seed) {
  if (wip.size() < 2) throw InvalidInput("word-initial set needs at least two phonemes");
  auto words = tokenize(topic);
  if (words.empty()) throw InvalidInput("topic has no words");
  auto phones = transcribe_word(words.front(), lex).phones;
  PhonemeId ph1;
  if (!phones.empty() && std::find(wip.begin(), wip.end(), phones.front().id) != wip.end()) {
    ph1 = phones.front().id;
  } else {
    Rng rng(seed);
    ph1 = wip[rng.uniform_index(wip.size())];
  }
  return {ph1, secondary_phoneme(ph1, wip, lex.table())};
}

std::string topic_prompt(std::string_view topic) {
  return "Generate a tongue-twister on the topic of \"" + std::string(topic) + "\"";
}

std::string DecodeResult::text() const {
  std::string out;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    if (i) out += ' ';
    out += generated[i];
  }
  return out;
}

DecodeResult decode(std::string_view topic, const LanguageModel& provider,
                    const DecoderConfig& cfg, const Lexicon& lex) {
  cfg.validate();
  DecodeResult result;
  result.topic = std::string(topic);
  result.prompt = topic_prompt(topic);
  auto [ph1, ph2] = pick_target_phonemes(topic, cfg.wip, lex, cfg.seed);
  result.ph1 = ph1;
  result.ph2 = ph2;

  DecodeState state{ph1, ph2, {}};
  std::vector<std::string> context = tokenize(result.prompt);
  while (static_cast<int>(state.generated.size()) < cfg.max_length) {
    std::vector<TokenCandidate> candidates;
    try {
      candidates = provider.next_tokens(context, cfg.scan_limit);
    } catch (const Error& e) {
      result.status = DecodeStatus::kProviderError;
      result.error = e.what();
      break;
    }
    DecodeStep step;
    step.step = static_cast<int>(state.generated.size()) + 1;
    bool appended = false;
    const auto limit = std::min(candidates.size(), static_cast<std::size_t>(cfg.scan_limit));
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& c = candidates[i];
      Admission a = admissible(c, state, cfg, lex);
      if (a.kind == AdmitKind::kReject) {
        step.rejected.push_back({c.token, c.rank, a});
        continue;
      }
      step.token = c.token;
      step.rank = c.rank;
      step.kind = a.kind;
      state.generated.push_back(c.token);
      context.push_back(c.token);
      appended = true;
      break;
    }
    if (!appended) {
      result.status = DecodeStatus::kExhaustedVocabulary;
      break;
    }
    result.trace.push_back(std::move(step));
  }
  result.generated = std::move(state.generated);
  return result;
}

std::string trace_jsonl(const DecodeResult& result, const PhonemeTable& table,
                        bool include_rejections) {
  using nlohmann::ordered_json;
  std::string out;
  ordered_json head;
  head["topic"] = result.topic;
  head["prompt"] = result.prompt;
  head["ph1"] = table.phoneme(result.ph1).ipa;
  head["ph2"] = table.phoneme(result.ph2).ipa;
  head["status"] = std::string(to_string(result.status));
  head["generated"] = result.text();
  if (!result.error.empty()) head["error"] = result.error;
  out += head.dump() + "\n";
  for (const auto& s : result.trace) {
    ordered_json j;
    j["step"] = s.step;
    j["token"] = s.token;
    j["rank"] = s.rank;
    j["reason"] = std::string(to_string(s.kind));
    if (include_rejections) {
      ordered_json rej = ordered_json::array();
      for (const auto& r : s.rejected) {
        rej.push_back({{"token", r.token}, {"rank", r.rank},
                       {"reason", std::string(to_string(r.admission.reason))}});
      }
      j["rejected"] = rej;
    } else {
      j["rejected"] = s.rejected.size();
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace twister
