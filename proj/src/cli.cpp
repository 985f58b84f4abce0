#include "twister/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "twister/errors.hpp"
#include "twister/lexicon.hpp"
#include "twister/lm.hpp"
#include "twister/metrics.hpp"
#include "twister/pacd.hpp"
#include "twister/phonology.hpp"
#include "twister/pipeline.hpp"
#include "twister/text.hpp"
#include "twister/vocab.hpp"

#ifndef TWISTER_DATA_DIR
#define TWISTER_DATA_DIR "data"
#endif

namespace twister {
namespace {

constexpr const char* kProviderEnv = "TWISTER_PROVIDER";

struct Key {
  const char* name;
  const char* fallback;  // "{data}" expands to data_dir
  const char* help;
};

const std::vector<Key>& config_keys() {
  static const std::vector<Key> keys = {
      {"data_dir", TWISTER_DATA_DIR, "Root of the bundled assets"},
      {"features", "{data}/phonology/features.tsv", "Phoneme feature table"},
      {"wip", "{data}/phonology/wip.txt", "Word-initial phoneme list"},
      {"lexicon", "{data}/lexicon/cmudict.dict", "Pronouncing dictionary"},
      {"fallback_rules", "{data}/g2p/fallback_rules.tsv", "Letter-to-sound rules"},
      {"embeddings", "{data}/embeddings/toy_vectors.txt", "Word vectors"},
      {"stopwords", "{data}/wordlists/stopwords.txt", "Function words"},
      {"profanity", "{data}/wordlists/offensive.txt", "Offensive word bank"},
      {"familiar", "{data}/wordlists/familiar_words.txt", "Dale-Chall familiar words"},
      {"modifiers", "{data}/wordlists/modifiers.txt", "Topic modifiers"},
      {"nouns", "{data}/wordlists/nouns.txt", "Topic nouns"},
      {"reference", "{data}/reference/classic_twisters.txt", "Reference texts for filter thresholds"},
      {"provider", "corpus:{data}/corpus/train.txt",
       "ngram:<counts>, corpus:<text> or http://host:port"},
      {"ngram_order", "3", "Order when training from a corpus"},
      {"ngram_k", "1", "Add-k constant"},
      {"seed", "7", "Random seed"},
      {"max_length", "30", "Decoded words"},
      {"function_window", "1", "Rank bound for function words"},
      {"min_word_length", "3", "Shortest content word"},
      {"max_repetition", "1", "Content word repetition cap"},
      {"scan_limit", "2500", "Candidates scanned per step"},
      {"bank_size", "10", "Words per phoneme bank"},
      {"dedup_threshold", "60", "Token sort ratio above which a twister is a duplicate"},
      {"phonemic_metric", "iped", "iped or oped"},
      {"max_tokens", "1000", "Generation length"},
      {"temperature", "0.8", "Generation temperature"},
      {"timeout", "30", "Remote timeout in seconds"},
      {"retries", "2", "Remote retries after a transport failure"},
  };
  return keys;
}

std::string dashed(std::string_view key) {
  std::string s(key);
  for (auto& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : config_keys()) values_[k.name] = k.fallback;
  }

  void set(const std::string& key, std::string value) {
    if (!values_.count(key)) throw UsageError("unknown config key: " + key);
    values_[key] = std::move(value);
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto body = trim(line);
      if (body.empty() || body.front() == '#') continue;
      auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(path, lineno, "expected key = value");
      std::string key(trim(body.substr(0, eq)));
      std::string value(trim(body.substr(eq + 1)));
      if (!values_.count(key)) throw ParseError(path, lineno, "unknown key: " + key);
      values_[key] = value;
    }
  }

  std::string get(const std::string& key) const {
    std::string v = values_.at(key);
    const std::string tag = "{data}";
    for (auto pos = v.find(tag); pos != std::string::npos; pos = v.find(tag)) {
      v.replace(pos, tag.size(), values_.at("data_dir"));
    }
    return v;
  }

  long long get_int(const std::string& key) const {
    auto v = get(key);
    try {
      std::size_t used = 0;
      long long n = std::stoll(v, &used);
      if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw UsageError(key + " must be an integer, got '" + v + "'");
  }

  double get_double(const std::string& key) const {
    auto v = get(key);
    try {
      std::size_t used = 0;
      double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw UsageError(key + " must be a number, got '" + v + "'");
  }

  void print(std::ostream& out) const {
    for (const auto& k : config_keys()) out << k.name << " = " << get(k.name) << '\n';
  }

 private:
  std::map<std::string, std::string> values_;
};

// Lazily loaded assets shared by the subcommands.
class Assets {
 public:
  explicit Assets(const RunConfig& cfg) : cfg_(cfg) {}

  std::shared_ptr<const PhonemeTable> table() {
    if (!table_) table_ = std::make_shared<const PhonemeTable>(PhonemeTable::load(cfg_.get("features")));
    return table_;
  }

  const Lexicon& lexicon() {
    if (!lexicon_) {
      auto t = table();
      auto lts = LetterToSound::load(cfg_.get("fallback_rules"), *t);
      lexicon_ = std::make_unique<Lexicon>(Lexicon::load(cfg_.get("lexicon"), t, std::move(lts)));
    }
    return *lexicon_;
  }

  const WordInitialSet& wip() {
    if (!wip_) wip_ = load_word_initial_set(cfg_.get("wip"), *table());
    return *wip_;
  }

  const EmbeddingTable& embeddings() {
    if (!emb_) emb_ = std::make_unique<EmbeddingTable>(EmbeddingTable::load(cfg_.get("embeddings")));
    return *emb_;
  }

  const WordSet& familiar() { return word_set("familiar"); }
  const WordSet& stopwords() { return word_set("stopwords"); }
  const WordSet& profanity() { return word_set("profanity"); }

 private:
  const WordSet& word_set(const std::string& key) {
    auto it = sets_.find(key);
    if (it == sets_.end()) it = sets_.emplace(key, load_word_set(require_file(key))).first;
    return it->second;
  }

  std::string require_file(const std::string& key) {
    auto path = cfg_.get(key);
    if (!std::filesystem::exists(path)) throw Error("missing " + key + " file: " + path);
    return path;
  }

  const RunConfig& cfg_;
  std::shared_ptr<const PhonemeTable> table_;
  std::unique_ptr<Lexicon> lexicon_;
  std::optional<WordInitialSet> wip_;
  std::unique_ptr<EmbeddingTable> emb_;
  std::map<std::string, WordSet> sets_;
};

struct Provider {
  std::unique_ptr<LanguageModel> model;
  RemoteModel* remote = nullptr;
};

bool is_http(std::string_view spec) {
  return spec.starts_with("http://") || spec.starts_with("https://");
}

Provider open_provider(const RunConfig& cfg) {
  const std::string spec = cfg.get("provider");
  Provider p;
  if (is_http(spec)) {
    RemoteOptions opts;
    opts.base_url = spec;
    opts.timeout_seconds = cfg.get_double("timeout");
    opts.max_retries = static_cast<int>(cfg.get_int("retries"));
    auto remote = std::make_unique<RemoteModel>(opts);
    p.remote = remote.get();
    p.model = std::move(remote);
  } else if (spec.starts_with("ngram:")) {
    p.model = std::make_unique<NGramModel>(NGramModel::load(spec.substr(6)));
  } else if (spec.starts_with("corpus:")) {
    std::ifstream in(spec.substr(7));
    if (!in) throw Error("cannot open corpus: " + spec.substr(7));
    p.model = std::make_unique<NGramModel>(NGramModel::train(
        in, static_cast<int>(cfg.get_int("ngram_order")), cfg.get_double("ngram_k")));
  } else {
    throw UsageError("provider must be ngram:<path>, corpus:<path> or an http URL: " + spec);
  }
  return p;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.emplace_back(trim(line));
  }
  return lines;
}

std::vector<std::string> gather_texts(const std::vector<std::string>& texts, const std::string& input) {
  std::vector<std::string> out = texts;
  if (!input.empty()) {
    auto lines = read_lines(input);
    out.insert(out.end(), lines.begin(), lines.end());
  }
  if (out.empty()) throw UsageError("give --text or --input");
  return out;
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
void emit(const std::string& path, std::ostream& fallback,
          const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write: " + path);
  body(f);
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

DecoderConfig decoder_config(const RunConfig& cfg, Assets& assets) {
  DecoderConfig d;
  d.max_length = static_cast<int>(cfg.get_int("max_length"));
  d.function_window = static_cast<int>(cfg.get_int("function_window"));
  d.min_word_length = static_cast<int>(cfg.get_int("min_word_length"));
  d.max_repetition = static_cast<int>(cfg.get_int("max_repetition"));
  d.scan_limit = static_cast<int>(cfg.get_int("scan_limit"));
  d.function_words = assets.stopwords();
  d.wip = assets.wip();
  d.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  return d;
}

PhonemicMetric phonemic_metric(const RunConfig& cfg) {
  auto m = cfg.get("phonemic_metric");
  if (m == "iped") return PhonemicMetric::kIped;
  if (m == "oped") return PhonemicMetric::kOped;
  throw UsageError("phonemic_metric must be iped or oped");
}

ReferenceStats load_reference_stats(const RunConfig& cfg, Assets& assets, const LanguageModel& scorer) {
  auto texts = read_lines(cfg.get("reference"));
  return reference_stats(texts, scorer, assets.lexicon(), phonemic_metric(cfg), cfg.get("reference"));
}

std::vector<TwisterRecord> read_record_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open records: " + path);
  return read_records(in, path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tongue-twister phonology, decoding and dataset toolkit", "twister"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "Flat key = value config file");
  app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  for (const auto& k : config_keys()) {
    flag_opts[k.name] = app.add_option("--" + dashed(k.name), flag_values[k.name], k.help);
  }

  std::vector<std::string> texts;
  std::string input, output, format, topic, ph, trace_path, stage, removed_path, report_path;
  std::string corpus, stages, host = "127.0.0.1", prompt_variant;
  bool json = false, dry_run = false, no_paraphrase = false;
  int count = 10, port = 8080;

  auto* transcribe = app.add_subcommand("transcribe", "Text to ARPABET / IPA");
  transcribe->add_option("--text", texts, "Text to transcribe");
  transcribe->add_option("--input", input, "File with one text per line");
  transcribe->add_option("--format", format, "arpabet, ipa or tsv")
      ->check(CLI::IsMember({"arpabet", "ipa", "tsv"}));

  auto* metrics = app.add_subcommand("metrics", "PO, Init-PO, iPED, oPED and readability");
  metrics->add_option("--text", texts, "Text to score");
  metrics->add_option("--input", input, "File with one text per line");
  metrics->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* vocab = app.add_subcommand("vocab", "Topic, phoneme pair and candidate word list");
  vocab->add_option("--topic", topic, "Topic phrase (sampled when absent)");
  vocab->add_option("--prompt", prompt_variant, "Also print prompt A or B")
      ->check(CLI::IsMember({"A", "B"}));

  auto* pair = app.add_subcommand("pair", "Primary and nearest secondary phoneme");
  pair->add_option("--ph", ph, "Primary phoneme, IPA or ARPABET (drawn when absent)");

  auto* decode_cmd = app.add_subcommand("decode", "Phoneme-aware constrained decoding");
  decode_cmd->add_option("--topic", topic, "Topic phrase")->required();
  decode_cmd->add_option("--trace", trace_path, "Write the step trace as JSON lines");
  decode_cmd->add_flag("--json", json, "Print the full trace instead of the text");

  auto* train = app.add_subcommand("ngram-train", "Train and save an n-gram model");
  train->add_option("--corpus", corpus, "One sentence per line")->required();
  train->add_option("--output", output, "Counts file")->required();

  auto* score = app.add_subcommand("score", "Perplexity under the provider");
  score->add_option("--text", texts, "Text to score");
  score->add_option("--input", input, "File with one text per line");

  auto* filter = app.add_subcommand("filter", "Run one refinement filter over records");
  filter->add_option("--stage", stage, "ppl, phonemic, dedup, profanity or topic_dedup")
      ->required()
      ->check(CLI::IsMember({"ppl", "phonemic", "dedup", "profanity", "topic_dedup"}));
  filter->add_option("--input", input, "Records (JSON lines)")->required();
  filter->add_option("--output", output, "Kept records (default stdout)");
  filter->add_option("--removed", removed_path, "Removed records with reasons");

  auto* pipeline = app.add_subcommand("pipeline", "Generate and refine a dataset");
  pipeline->add_option("--count", count, "Topics to generate")->check(CLI::NonNegativeNumber);
  pipeline->add_option("--input", input, "Refine these records instead of generating");
  pipeline->add_flag("--dry-run", dry_run, "Use the stub generator");
  pipeline->add_option("--stages", stages, "Comma-separated stage order");
  pipeline->add_flag("--no-paraphrase", no_paraphrase, "Skip the paraphrase step");
  pipeline->add_option("--output", output, "Records (default stdout)");
  pipeline->add_option("--report", report_path, "Stage report (default stderr)");

  auto* serve_check = app.add_subcommand("serve-check", "Probe a remote provider");
  auto* serve = app.add_subcommand("serve", "Serve the configured n-gram provider over HTTP");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (const char* env = std::getenv(kProviderEnv); env && *env) cfg.set("provider", env);
    for (const auto& [key, opt] : flag_opts) {
      if (opt->count() > 0) cfg.set(key, flag_values[key]);
    }

    if (print_config) {
      cfg.print(out);
      return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      err << app.help();
      return kExitUsage;
    }

    Assets assets(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

    if (*transcribe) {
      const auto& lex = assets.lexicon();
      for (const auto& text : gather_texts(texts, input)) {
        auto t = transcribe_text(text, lex);
        auto arpa = render_arpabet(t, lex.table());
        auto ipa = render_ipa(t, lex.table());
        if (format == "ipa") {
          out << ipa << '\n';
        } else if (format == "tsv") {
          out << text << '\t' << arpa << '\t' << ipa << '\n';
        } else {
          out << arpa << '\n';
        }
      }
    } else if (*metrics) {
      const auto& lex = assets.lexicon();
      const auto& familiar = assets.familiar();
      auto all = gather_texts(texts, input);
      if (format != "jsonl") out << report_csv_header() << '\n';
      for (std::size_t i = 0; i < all.size(); ++i) {
        auto r = compute_report(std::to_string(i + 1), all[i], lex, &familiar);
        out << (format == "jsonl" ? report_json(r) : report_csv_row(r)) << '\n';
      }
    } else if (*vocab) {
      const auto& lex = assets.lexicon();
      TopicPhrase tp;
      if (topic.empty()) {
        auto modifiers = load_word_list(cfg.get("modifiers"));
        auto nouns = load_word_list(cfg.get("nouns"));
        tp = sample_topic(seed, modifiers, nouns);
      } else {
        auto words = split_whitespace(topic);
        if (words.size() != 2) throw UsageError("--topic takes a modifier and a noun");
        tp = {words[0], words[1]};
      }
      auto list = build_candidate_list(tp, assets.wip(), lex, assets.embeddings(),
                                       static_cast<std::size_t>(cfg.get_int("bank_size")), seed);
      std::vector<std::string> words;
      for (const auto& w : list.words) words.push_back(w.token);
      out << "topic: " << list.topic.text() << '\n';
      out << "ph1: " << lex.table().phoneme(list.ph1).ipa << '\n';
      out << "ph2: " << lex.table().phoneme(list.ph2).ipa << '\n';
      out << "words:";
      for (std::size_t i = 0; i < words.size(); ++i) out << (i ? ", " : " ") << words[i];
      out << '\n';
      if (!prompt_variant.empty()) {
        out << "prompt: " << build_prompt(parse_prompt_variant(prompt_variant), words) << '\n';
      }
    } else if (*pair) {
      auto table = assets.table();
      const auto& wip = assets.wip();
      PhonemeId primary;
      if (ph.empty()) {
        primary = select_phoneme_pair(wip, seed, *table).first;
      } else {
        primary = table->resolve(ph);
      }
      auto secondary = secondary_phoneme(primary, wip, *table);
      out << table->phoneme(primary).ipa << ' ' << table->phoneme(secondary).ipa << '\n';
    } else if (*decode_cmd) {
      auto provider = open_provider(cfg);
      auto dcfg = decoder_config(cfg, assets);
      const auto& lex = assets.lexicon();
      auto result = decode(topic, *provider.model, dcfg, lex);
      if (!trace_path.empty()) {
        emit(trace_path, out, [&](std::ostream& o) { o << trace_jsonl(result, lex.table(), true); });
      }
      if (json) {
        out << trace_jsonl(result, lex.table(), true);
      } else {
        out << result.text() << '\n';
      }
      if (result.status == DecodeStatus::kProviderError) {
        err << "provider error: " << result.error << '\n';
        return kExitData;
      }
      if (result.status == DecodeStatus::kExhaustedVocabulary) {
        err << "stopped early: no admissible candidate after " << result.generated.size()
            << " words\n";
      }
    } else if (*train) {
      std::ifstream in(corpus);
      if (!in) throw Error("cannot open corpus: " + corpus);
      auto model = NGramModel::train(in, static_cast<int>(cfg.get_int("ngram_order")),
                                     cfg.get_double("ngram_k"));
      emit(output, out, [&](std::ostream& o) { model.save(o); });
    } else if (*score) {
      auto provider = open_provider(cfg);
      for (const auto& text : gather_texts(texts, input)) {
        out << fixed(twister_perplexity(*provider.model, text)) << '\n';
      }
    } else if (*filter) {
      auto records = read_record_file(input);
      FilterResult res;
      if (stage == "ppl" || stage == "phonemic") {
        auto provider = open_provider(cfg);
        auto stats = load_reference_stats(cfg, assets, *provider.model);
        res = stage == "ppl"
                  ? ppl_filter(records, *provider.model, stats)
                  : phonemic_filter(records, assets.lexicon(), stats, phonemic_metric(cfg));
      } else if (stage == "dedup") {
        res = dedup(records, cfg.get_double("dedup_threshold"));
      } else if (stage == "profanity") {
        res = profanity_filter(records, assets.profanity());
      } else {
        res = dedup_topics(records);
      }
      emit(output, out, [&](std::ostream& o) { write_records(o, res.kept); });
      if (!removed_path.empty()) {
        emit(removed_path, out, [&](std::ostream& o) {
          for (const auto& rm : res.removed) {
            o << rm.record.tt_id << '\t' << rm.reason << '\n';
          }
        });
      }
      err << stage << ": input " << records.size() << ", kept " << res.kept.size()
          << ", removed " << res.removed.size() << '\n';
    } else if (*pipeline) {
      auto provider = open_provider(cfg);
      std::unique_ptr<TextGenerator> stub;
      TextGenerator* generator = provider.remote;
      if (dry_run) {
        stub = std::make_unique<StubGenerator>();
        generator = stub.get();
      }
      if (!generator) throw UsageError("pipeline needs an http provider or --dry-run");

      PipelineConfig pc;
      if (!stages.empty()) {
        pc.stages.clear();
        std::string item;
        std::istringstream ss(stages);
        while (std::getline(ss, item, ',')) pc.stages.push_back(parse_stage(trim(item)));
      }
      pc.stats = load_reference_stats(cfg, assets, *provider.model);
      pc.dedup_threshold = cfg.get_double("dedup_threshold");
      pc.phonemic_metric = phonemic_metric(cfg);
      pc.profanity_bank = assets.profanity();
      pc.generation.max_tokens = static_cast<int>(cfg.get_int("max_tokens"));
      pc.generation.temperature = cfg.get_double("temperature");
      pc.paraphrase = !no_paraphrase;

      PipelineOutput result;
      if (!input.empty()) {
        result = refine_records(read_record_file(input), pc, assets.lexicon(), *provider.model,
                                *generator);
      } else {
        GenerationPlan plan;
        plan.count = static_cast<std::size_t>(count);
        plan.seed = seed;
        plan.modifiers = load_word_list(cfg.get("modifiers"));
        plan.nouns = load_word_list(cfg.get("nouns"));
        plan.wip = assets.wip();
        plan.bank_size = static_cast<std::size_t>(cfg.get_int("bank_size"));
        result = run_pipeline(plan, pc, assets.lexicon(), assets.embeddings(), *provider.model,
                              *generator);
      }
      emit(output, out, [&](std::ostream& o) { write_records(o, result.records); });
      emit(report_path, err, [&](std::ostream& o) { o << result.report.to_json() << '\n'; });
      if (!result.report.completed) {
        err << "pipeline halted: " << result.report.error << '\n';
        return kExitData;
      }
    } else if (*serve_check) {
      auto spec = cfg.get("provider");
      if (!is_http(spec)) throw UsageError("serve-check needs an http provider");
      auto provider = open_provider(cfg);
      if (!provider.remote->check()) {
        err << "unreachable: " << spec << '\n';
        return kExitData;
      }
      out << "ok " << spec << '\n';
    } else if (*serve) {
      auto provider = open_provider(cfg);
      EchoGenerator echo;
      ModelServer server(*provider.model, &echo);
      err << "serving on " << host << ':' << port << '\n';
      server.serve(host, port);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace twister
