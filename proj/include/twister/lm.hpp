#ifndef TWISTER_LM_HPP
#define TWISTER_LM_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace twister {

// One ranked next-word prediction. Within a distribution ranks run 1..k
// without gaps and logprobs never increase with rank.
struct TokenCandidate {
  std::string token;
  double logprob = 0.0;
  int rank = 0;
};

// Word-level next-token provider.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  // Top `top_k` words after `context`, ordered by probability with ties
  // broken alphabetically. The end-of-sentence marker is never returned.
  virtual std::vector<TokenCandidate> next_tokens(std::span<const std::string> context,
                                                  int top_k) const = 0;

  // Natural-log probability of every token given its left context, followed
  // by one entry for the end-of-sentence marker (tokens.size() + 1 values).
  virtual std::vector<double> score(std::span<const std::string> tokens) const = 0;
};

struct GenerationParams {
  int max_tokens = 1000;
  double temperature = 0.8;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt, const GenerationParams& params) = 0;
};

// exp(-(1/N) sum log p), N counting the end-of-sentence marker.
double perplexity(const LanguageModel& model, std::span<const std::string> tokens);

// Add-k smoothed word n-gram model (order 1 to 3). A context never seen in
// training falls back to the longest seen suffix, down to the unigram; each
// level is a proper distribution over the vocabulary plus the end marker.
class NGramModel : public LanguageModel {
 public:
  static constexpr const char* kBegin = "<s>";
  static constexpr const char* kEnd = "</s>";

  // One sentence per non-empty line; tokens lowercased with edge
  // punctuation stripped.
  static NGramModel train(std::istream& corpus, int order, double k = 1.0);
  static NGramModel train(const std::vector<std::vector<std::string>>& sentences, int order,
                          double k = 1.0);

  // Line-oriented counts file:
  //   # twister ngram counts v1
  //   order <n>
  //   k <value>
  //   count <n> <count> <context tokens...> <word>
  // Lines are emitted in sorted order so equal models serialize identically.
  void save(std::ostream& out) const;
  static NGramModel read(std::istream& in, const std::string& source_name = "<ngram>");
  static NGramModel load(const std::filesystem::path& path);

  int order() const { return order_; }
  double k() const { return k_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  // P(word | context); `word` may be kEnd. Context is padded with kBegin.
  double probability(std::span<const std::string> context, const std::string& word) const;

  std::vector<TokenCandidate> next_tokens(std::span<const std::string> context,
                                          int top_k) const override;
  std::vector<double> score(std::span<const std::string> tokens) const override;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<std::string, std::uint64_t> next;
  };

  void add_sentence(const std::vector<std::string>& words);
  void finish();
  // Highest-order seen context for the padded history.
  const ContextCounts& lookup(std::span<const std::string> context) const;

  int order_ = 1;
  double k_ = 1.0;
  std::vector<std::string> vocab_;  // sorted, excludes markers
  // levels_[n - 1] holds n-gram counts keyed by the (n - 1)-word context
  // joined with single spaces.
  std::vector<std::map<std::string, ContextCounts>> levels_;
};

struct RemoteOptions {
  std::string base_url = "http://127.0.0.1:8080";
  double timeout_seconds = 30.0;
  int max_retries = 2;  // extra attempts after the first transport failure
};

// Client for the JSON wire protocol:
//   POST /v1/next_token {context, top_k}               -> {candidates: [{token, logprob}]}
//   POST /v1/score      {tokens}                       -> {logprobs}
//   POST /v1/generate   {prompt, max_tokens, temperature} -> {text}
// Each call opens its own connection, so one instance serves concurrent callers.
class RemoteModel : public LanguageModel, public TextGenerator {
 public:
  explicit RemoteModel(RemoteOptions options);

  std::vector<TokenCandidate> next_tokens(std::span<const std::string> context,
                                          int top_k) const override;
  std::vector<double> score(std::span<const std::string> tokens) const override;
  std::string generate(const std::string& prompt, const GenerationParams& params) override;

  // True when the endpoint answers /v1/next_token with a well-formed body.
  bool check() const;

  const RemoteOptions& options() const { return options_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  RemoteOptions options_;
};

// Returns the prompt unchanged.
class EchoGenerator : public TextGenerator {
 public:
  std::string generate(const std::string& prompt, const GenerationParams&) override { return prompt; }
};

// Serves a LanguageModel (and optionally a TextGenerator) over the wire
// protocol. /v1/generate answers 501 without a generator.
class ModelServer {
 public:
  ModelServer(const LanguageModel& model, TextGenerator* generator = nullptr);
  ~ModelServer();
  ModelServer(const ModelServer&) = delete;
  ModelServer& operator=(const ModelServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void serve(const std::string& host, int port);
  void stop();
  std::string base_url() const;

 private:
  void install_routes();

  const LanguageModel& model_;
  TextGenerator* generator_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace twister

#endif  // TWISTER_LM_HPP
