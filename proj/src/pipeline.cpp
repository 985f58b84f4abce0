#include "twister/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "twister/metrics.hpp"

namespace twister {

using ordered_json = nlohmann::ordered_json;

// --- prompts ---------------------------------------------------------------

const char* const kParaphraseSystemMessage =
    "In this task you will pretend that you're an author who is rewriting existing works into a "
    "non-literary form that more resembles prose. You will be presented with a tongue-twister and "
    "asked to rewrite it using synonym replacement so that there are no longer high levels of "
    "phonetic overlap and sound repetition. Example 1: INPUT = \"She sells sea shells by the "
    "seashore.\" OUTPUT = \"The girl sells conches by the ocean.\" Example 2: INPUT = \"Peter Piper "
    "picks pickled peppers\" OUTPUT = \"Peter Piper selects preserved capsicums\"";

namespace {

constexpr std::string_view kPromptA =
    "Generate a sensible and grammatical tongue-twister using words from the following list: ";
constexpr std::string_view kPromptATail =
    ". The output should be a single sentence and be grammatical and coherent";
constexpr std::string_view kPromptB =
    "Generate a tongue-twister by primarily using words from the following list: ";
constexpr std::string_view kPromptBTail = ". The output should be grammatical and coherent";
constexpr std::string_view kRefine =
    "Improve the following tongue-twister by editing it so that is makes more sense and is "
    "grammatical: ";
constexpr std::string_view kTopic = "Generate a tongue-twister on the topic of \"";
constexpr std::string_view kStyle = "Generate a tongue-twister by rewriting the following text: ";
constexpr std::string_view kParaphraseUser = "INPUT = \"";
constexpr std::string_view kParaphraseUserTail = ", OUTPUT = \"";

std::string join(std::span<const std::string> words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kA: return "A";
    case PromptVariant::kB: return "B";
    case PromptVariant::kRefine: return "refine";
    case PromptVariant::kParaphrase: return "paraphrase";
    case PromptVariant::kTopicToTwister: return "topic2twister";
    case PromptVariant::kStyleTransfer: return "styletransfer";
  }
  return "?";
}

PromptVariant parse_prompt_variant(std::string_view name) {
  for (auto v : {PromptVariant::kA, PromptVariant::kB, PromptVariant::kRefine,
                 PromptVariant::kParaphrase, PromptVariant::kTopicToTwister,
                 PromptVariant::kStyleTransfer}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidInput("unknown prompt variant: " + std::string(name));
}

std::string build_prompt(PromptVariant variant, const PromptPayload& payload) {
  const bool wants_list = variant == PromptVariant::kA || variant == PromptVariant::kB;
  if (wants_list != std::holds_alternative<std::vector<std::string>>(payload)) {
    throw InvalidInput(std::string("prompt variant ") + std::string(to_string(variant)) +
                       (wants_list ? " takes a word list" : " takes a single text"));
  }
  if (wants_list) {
    const auto& words = std::get<std::vector<std::string>>(payload);
    if (words.empty()) throw InvalidInput("empty word list");
    std::string list = join(words, ", ");
    if (variant == PromptVariant::kA) return std::string(kPromptA) + list + std::string(kPromptATail);
    return std::string(kPromptB) + list + std::string(kPromptBTail);
  }
  const auto& text = std::get<std::string>(payload);
  switch (variant) {
    case PromptVariant::kRefine: return std::string(kRefine) + text;
    case PromptVariant::kParaphrase:
      return std::string(kParaphraseSystemMessage) + "\n\n" + std::string(kParaphraseUser) + text +
             std::string(kParaphraseUserTail);
    case PromptVariant::kTopicToTwister: return std::string(kTopic) + text + "\"";
    case PromptVariant::kStyleTransfer: return std::string(kStyle) + text;
    default: break;
  }
  throw InvalidInput("unknown prompt variant");
}

// --- records ----------------------------------------------------------------

std::string record_to_json(const TwisterRecord& r) {
  ordered_json j;
  j["tt_id"] = r.tt_id;
  j["topic"] = r.topic;
  j["source"] = r.source;
  j["prompt_variant"] = r.prompt_variant;
  j["twister"] = r.twister;
  j["paraphrase"] = r.paraphrase ? ordered_json(*r.paraphrase) : ordered_json(nullptr);
  j["twister_arpabet"] = r.twister_arpabet;
  j["twister_ipa"] = r.twister_ipa;
  return j.dump();
}

namespace {

std::string required_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(std::string("missing field: ") + key);
  if (!it->is_string()) throw InvalidInput(std::string("field is not a string: ") + key);
  return it->get<std::string>();
}

std::string optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw InvalidInput(std::string("field is not a string: ") + key);
  return it->get<std::string>();
}

}  // namespace

TwisterRecord record_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInput("record is not a JSON object");
  TwisterRecord r;
  auto id = j.find("tt_id");
  if (id == j.end() || !id->is_number_integer()) throw InvalidInput("tt_id must be an integer");
  r.tt_id = id->get<std::int64_t>();
  r.topic = optional_string(j, "topic");
  r.source = optional_string(j, "source");
  r.prompt_variant = required_string(j, "prompt_variant");
  if (r.prompt_variant != "A" && r.prompt_variant != "B" && r.prompt_variant != "human") {
    throw InvalidInput("prompt_variant must be A, B or human");
  }
  r.twister = required_string(j, "twister");
  if (trim(r.twister).empty()) throw InvalidInput("empty twister");
  if (auto p = j.find("paraphrase"); p != j.end() && !p->is_null()) {
    if (!p->is_string()) throw InvalidInput("field is not a string: paraphrase");
    r.paraphrase = p->get<std::string>();
  }
  r.twister_arpabet = optional_string(j, "twister_arpabet");
  r.twister_ipa = optional_string(j, "twister_ipa");
  return r;
}

std::vector<TwisterRecord> read_records(std::istream& in, const std::string& source_name) {
  std::vector<TwisterRecord> out;
  std::set<std::int64_t> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const InvalidInput& e) {
      throw ParseError(source_name, lineno, e.what());
    }
    if (!ids.insert(out.back().tt_id).second) {
      throw ParseError(source_name, lineno, "duplicate tt_id " + std::to_string(out.back().tt_id));
    }
  }
  return out;
}

void write_records(std::ostream& out, std::span<const TwisterRecord> records) {
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

void enrich_transcriptions(TwisterRecord& r, const Lexicon& lex) {
  auto t = transcribe_text(r.twister, lex);
  r.twister_arpabet = render_arpabet(t, lex.table());
  r.twister_ipa = render_ipa(t, lex.table());
}

// --- filters ----------------------------------------------------------------

namespace {

std::vector<std::string> lm_tokens(std::string_view text) {
  auto tokens = tokenize(text);
  for (auto& t : tokens) t = to_lower(t);
  return tokens;
}

double phonemic_score(std::string_view text, const Lexicon& lex, PhonemicMetric metric) {
  auto t = transcribe_text(text, lex);
  return metric == PhonemicMetric::kIped ? iped(t, lex.table()) : oped(t, lex.table());
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw InvalidInput("no reference values");
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

double twister_perplexity(const LanguageModel& scorer, std::string_view text) {
  auto tokens = lm_tokens(text);
  return perplexity(scorer, tokens);
}

ReferenceStats reference_stats(std::span<const std::string> texts, const LanguageModel& scorer,
                               const Lexicon& lex, PhonemicMetric metric, std::string label) {
  std::vector<double> ppl;
  std::vector<double> phon;
  for (const auto& text : texts) {
    if (lm_tokens(text).empty()) continue;
    ppl.push_back(twister_perplexity(scorer, text));
    try {
      phon.push_back(phonemic_score(text, lex, metric));
    } catch (const InvalidInput&) {
    }
  }
  ReferenceStats s;
  std::tie(s.ppl_mean, s.ppl_std) = mean_std(ppl);
  std::tie(s.phon_mean, s.phon_std) = mean_std(phon);
  s.source_label = std::move(label);
  return s;
}

FilterResult ppl_filter(std::span<const TwisterRecord> records, const LanguageModel& scorer,
                        const ReferenceStats& stats) {
  FilterResult out;
  const double limit = stats.ppl_mean + stats.ppl_std;
  for (const auto& r : records) {
    double p;
    try {
      p = twister_perplexity(scorer, r.twister);
    } catch (const ProviderError& e) {
      throw StageFailure(std::string("scorer failed: ") + e.what(), std::move(out));
    } catch (const InvalidInput& e) {
      out.removed.push_back({r, std::string("unscorable: ") + e.what()});
      continue;
    }
    if (p <= limit) {
      out.kept.push_back(r);
    } else {
      out.removed.push_back({r, "ppl " + format_value(p) + " > " + format_value(limit)});
    }
  }
  return out;
}

FilterResult phonemic_filter(std::span<const TwisterRecord> records, const Lexicon& lex,
                             const ReferenceStats& stats, PhonemicMetric metric) {
  FilterResult out;
  const double limit = stats.phon_mean + stats.phon_std;
  const char* name = metric == PhonemicMetric::kIped ? "iped" : "oped";
  for (const auto& r : records) {
    double v;
    try {
      v = phonemic_score(r.twister, lex, metric);
    } catch (const Error& e) {
      out.removed.push_back({r, std::string("transcription failed: ") + e.what()});
      continue;
    }
    if (v <= limit) {
      out.kept.push_back(r);
    } else {
      out.removed.push_back(
          {r, std::string(name) + " " + format_value(v) + " > " + format_value(limit)});
    }
  }
  return out;
}

namespace {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    std::size_t j = 1;
    for (; j < static_cast<std::size_t>(len) && i + j < s.size(); ++j) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + j]) & 0x3F);
    }
    out.push_back(cp);
    i += j;
  }
  return out;
}

std::u32string sort_tokens(std::string_view s) {
  std::string cleaned;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
  }
  auto tokens = split_whitespace(cleaned);
  std::sort(tokens.begin(), tokens.end());
  return decode_utf8(join(tokens, " "));
}

std::size_t lcs_length(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (char32_t ca : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = ca == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

double token_sort_ratio(std::string_view a, std::string_view b) {
  auto sa = sort_tokens(a);
  auto sb = sort_tokens(b);
  const std::size_t total = sa.size() + sb.size();
  if (total == 0) return 100.0;
  const std::size_t indel = total - 2 * lcs_length(sa, sb);
  return 100.0 * (1.0 - static_cast<double>(indel) / static_cast<double>(total));
}

FilterResult dedup(std::span<const TwisterRecord> records, double threshold) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return records[x].tt_id < records[y].tt_id;
  });
  std::vector<std::size_t> kept_idx;
  std::unordered_map<std::size_t, std::string> reasons;
  for (std::size_t i : order) {
    bool dup = false;
    for (std::size_t k : kept_idx) {
      double ratio = token_sort_ratio(records[i].twister, records[k].twister);
      if (ratio > threshold) {
        reasons[i] = "near-duplicate of " + std::to_string(records[k].tt_id) + " (ratio " +
                     format_value(ratio) + ")";
        dup = true;
        break;
      }
    }
    if (!dup) kept_idx.push_back(i);
  }
  FilterResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = reasons.find(i);
    if (it == reasons.end()) {
      out.kept.push_back(records[i]);
    } else {
      out.removed.push_back({records[i], it->second});
    }
  }
  return out;
}

FilterResult profanity_filter(std::span<const TwisterRecord> records, const WordSet& bank) {
  FilterResult out;
  for (const auto& r : records) {
    std::string hit;
    std::string token;
    auto check = [&] {
      if (hit.empty() && !token.empty() && bank.count(token)) hit = token;
      token.clear();
    };
    for (char c : r.twister) {
      auto u = static_cast<unsigned char>(c);
      if (u < 0x80 && !std::isalnum(u)) {
        check();
      } else {
        token += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
      }
    }
    check();
    if (hit.empty()) {
      out.kept.push_back(r);
    } else {
      out.removed.push_back({r, "offensive token: " + hit});
    }
  }
  return out;
}

FilterResult dedup_topics(std::span<const TwisterRecord> records) {
  FilterResult out;
  std::unordered_map<std::string, std::int64_t> seen;
  for (const auto& r : records) {
    std::string key = join(split_whitespace(to_lower(r.topic)), " ");
    auto [it, fresh] = seen.emplace(key, r.tt_id);
    if (fresh) {
      out.kept.push_back(r);
    } else {
      out.removed.push_back({r, "topic already used by " + std::to_string(it->second)});
    }
  }
  return out;
}

// --- pipeline ---------------------------------------------------------------

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kRefine: return "refine";
    case Stage::kPpl: return "ppl";
    case Stage::kPhonemic: return "phonemic";
    case Stage::kDedup: return "dedup";
    case Stage::kProfanity: return "profanity";
    case Stage::kTopicDedup: return "topic_dedup";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (auto s : default_stage_order()) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown pipeline stage: " + std::string(name));
}

std::vector<Stage> default_stage_order() {
  return {Stage::kRefine, Stage::kPpl,       Stage::kPhonemic,
          Stage::kDedup,  Stage::kProfanity, Stage::kTopicDedup};
}

std::string PipelineReport::to_json() const {
  ordered_json j;
  j["generated"] = generated;
  j["skipped_topics"] = skipped_topics;
  j["stages"] = ordered_json::array();
  for (const auto& s : stages) {
    ordered_json st;
    st["name"] = s.name;
    st["input"] = s.input;
    st["kept"] = s.kept;
    st["removed"] = s.removed;
    st["modified"] = s.modified;
    st["removals"] = ordered_json::array();
    for (const auto& [id, why] : s.removals) st["removals"].push_back({{"tt_id", id}, {"reason", why}});
    j["stages"].push_back(std::move(st));
  }
  j["output"] = output;
  j["completed"] = completed;
  if (!error.empty()) j["error"] = error;
  return j.dump(2);
}

std::vector<TwisterRecord> generate_records(const GenerationPlan& plan, const Lexicon& lex,
                                            const EmbeddingTable& emb, TextGenerator& generator,
                                            const GenerationParams& params,
                                            std::size_t* skipped_topics) {
  if (plan.prompt_a_share < 0.0 || plan.prompt_a_share > 1.0) {
    throw InvalidInput("prompt_a_share must lie in [0, 1]");
  }
  std::vector<TwisterRecord> out;
  std::size_t skipped = 0;
  Rng rng(plan.seed);
  for (std::size_t i = 0; i < plan.count; ++i) {
    const std::uint64_t topic_seed = rng.next();
    TopicPhrase topic = sample_topic(topic_seed, plan.modifiers, plan.nouns);
    CandidateList list;
    try {
      list = build_candidate_list(topic, plan.wip, lex, emb, plan.bank_size, rng.next());
    } catch (const InvalidInput&) {
      ++skipped;
      continue;
    }
    const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    const auto variant = u < plan.prompt_a_share ? PromptVariant::kA : PromptVariant::kB;
    std::vector<std::string> words;
    for (const auto& w : list.words) words.push_back(w.token);
    TwisterRecord r;
    r.tt_id = plan.first_id + static_cast<std::int64_t>(out.size());
    r.topic = topic.text();
    r.source = "generated";
    r.prompt_variant = std::string(to_string(variant));
    r.twister = std::string(trim(generator.generate(build_prompt(variant, words), params)));
    out.push_back(std::move(r));
  }
  if (skipped_topics) *skipped_topics = skipped;
  return out;
}

PipelineOutput refine_records(std::vector<TwisterRecord> records, const PipelineConfig& config,
                              const Lexicon& lex, const LanguageModel& scorer,
                              TextGenerator& generator) {
  PipelineOutput out;
  auto record_stage = [&](std::string_view name, std::size_t input, const FilterResult& res,
                          std::size_t modified) {
    StageReport st;
    st.name = std::string(name);
    st.input = input;
    st.kept = res.kept.size();
    st.removed = res.removed.size();
    st.modified = modified;
    for (const auto& rm : res.removed) st.removals.emplace_back(rm.record.tt_id, rm.reason);
    out.report.stages.push_back(std::move(st));
  };

  for (Stage stage : config.stages) {
    const std::size_t input = records.size();
    FilterResult res;
    std::size_t modified = 0;
    try {
      switch (stage) {
        case Stage::kRefine:
          for (auto& r : records) {
            if (r.prompt_variant != "A") {
              res.kept.push_back(r);
              continue;
            }
            std::string improved;
            try {
              improved = std::string(
                  trim(generator.generate(build_prompt(PromptVariant::kRefine, r.twister),
                                          config.generation)));
            } catch (const ProviderError& e) {
              throw StageFailure(std::string("refinement failed: ") + e.what(), res);
            }
            if (improved.empty()) {
              res.removed.push_back({r, "empty refinement"});
              continue;
            }
            if (improved != r.twister) ++modified;
            auto copy = r;
            copy.twister = std::move(improved);
            res.kept.push_back(std::move(copy));
          }
          break;
        case Stage::kPpl: res = ppl_filter(records, scorer, config.stats); break;
        case Stage::kPhonemic:
          res = phonemic_filter(records, lex, config.stats, config.phonemic_metric);
          break;
        case Stage::kDedup: res = dedup(records, config.dedup_threshold); break;
        case Stage::kProfanity: res = profanity_filter(records, config.profanity_bank); break;
        case Stage::kTopicDedup: res = dedup_topics(records); break;
      }
    } catch (const StageFailure& e) {
      record_stage(to_string(stage), input, e.partial(), modified);
      out.report.completed = false;
      out.report.error = e.what();
      out.records = std::move(records);
      out.report.output = out.records.size();
      return out;
    }
    record_stage(to_string(stage), input, res, modified);
    records = std::move(res.kept);
  }

  for (auto& r : records) {
    if (config.paraphrase) {
      try {
        r.paraphrase = std::string(trim(generator.generate(
            build_prompt(PromptVariant::kParaphrase, r.twister), config.generation)));
      } catch (const ProviderError& e) {
        out.report.completed = false;
        out.report.error = std::string("paraphrase failed: ") + e.what();
      }
    }
    enrich_transcriptions(r, lex);
  }
  out.records = std::move(records);
  out.report.output = out.records.size();
  return out;
}

PipelineOutput run_pipeline(const GenerationPlan& plan, const PipelineConfig& config,
                            const Lexicon& lex, const EmbeddingTable& emb,
                            const LanguageModel& scorer, TextGenerator& generator) {
  std::size_t skipped = 0;
  auto records = generate_records(plan, lex, emb, generator, config.generation, &skipped);
  const std::size_t generated = records.size();
  auto out = refine_records(std::move(records), config, lex, scorer, generator);
  out.report.generated = generated;
  out.report.skipped_topics = skipped;
  return out;
}

// --- stub generator ---------------------------------------------------------

StubGenerator::StubGenerator(std::vector<std::string> canned) : canned_(std::move(canned)) {}

std::string StubGenerator::generate(const std::string& prompt, const GenerationParams&) {
  prompts_.push_back(prompt);
  auto starts = [&](std::string_view p) { return prompt.compare(0, p.size(), p) == 0; };
  if (starts(kRefine)) return prompt.substr(kRefine.size());
  if (starts(kParaphraseSystemMessage)) return "A plain retelling of the line above.";
  const bool list_prompt = starts(kPromptA) || starts(kPromptB);
  if (list_prompt || starts(kTopic) || starts(kStyle)) {
    if (!canned_.empty()) return canned_[next_++ % canned_.size()];
    if (list_prompt) {
      auto head = starts(kPromptA) ? kPromptA.size() : kPromptB.size();
      auto end = prompt.find(". The output", head);
      std::string list = prompt.substr(head, end - head);
      std::string out;
      for (auto& w : split_whitespace(list)) {
        if (!w.empty() && w.back() == ',') w.pop_back();
        if (!out.empty()) out += ' ';
        out += w;
      }
      if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
      return out + ".";
    }
  }
  return prompt;
}

}  // namespace twister
