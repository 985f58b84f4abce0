#include "twister/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "twister/errors.hpp"
#include "twister/text.hpp"

namespace twister {

using nlohmann::json;

double perplexity(const LanguageModel& model, std::span<const std::string> tokens) {
  if (tokens.empty()) throw InvalidInput("perplexity of an empty text");
  auto logprobs = model.score(tokens);
  if (logprobs.empty()) throw ProviderError("score returned no log-probabilities", false);
  double sum = 0.0;
  for (double lp : logprobs) sum += lp;
  return std::exp(-sum / static_cast<double>(logprobs.size()));
}

// --- NGramModel -------------------------------------------------------------

namespace {

std::string join_context(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> lowered(std::span<const std::string> words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(to_lower(w));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NGramModel NGramModel::train(std::istream& corpus, int order, double k) {
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(corpus, line)) {
    auto words = tokenize(line);
    if (words.empty()) continue;
    for (auto& w : words) w = to_lower(w);
    sentences.push_back(std::move(words));
  }
  return train(sentences, order, k);
}

NGramModel NGramModel::train(const std::vector<std::vector<std::string>>& sentences, int order,
                             double k) {
  if (order < 1 || order > 3) throw InvalidInput("n-gram order must be 1, 2 or 3");
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidInput("smoothing constant k must be positive");
  NGramModel m;
  m.order_ = order;
  m.k_ = k;
  m.levels_.assign(static_cast<std::size_t>(order), {});
  for (const auto& s : sentences) {
    if (!s.empty()) m.add_sentence(lowered(s));
  }
  if (m.levels_[0].empty()) throw InvalidInput("n-gram corpus has no tokens");
  m.finish();
  return m;
}

void NGramModel::add_sentence(const std::vector<std::string>& words) {
  std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), kBegin);
  padded.insert(padded.end(), words.begin(), words.end());
  padded.push_back(kEnd);
  const std::size_t first = static_cast<std::size_t>(order_ - 1);
  for (std::size_t i = first; i < padded.size(); ++i) {
    for (int n = 1; n <= order_; ++n) {
      std::span<const std::string> ctx(padded.data() + i - (n - 1), static_cast<std::size_t>(n - 1));
      auto& cc = levels_[static_cast<std::size_t>(n - 1)][join_context(ctx)];
      ++cc.total;
      ++cc.next[padded[i]];
    }
  }
}

void NGramModel::finish() {
  vocab_.clear();
  for (const auto& [word, count] : levels_[0].at("").next) {
    if (word != kEnd) vocab_.push_back(word);
  }
}

const NGramModel::ContextCounts& NGramModel::lookup(std::span<const std::string> context) const {
  std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), kBegin);
  for (const auto& w : context) padded.push_back(to_lower(w));
  for (int n = order_; n >= 1; --n) {
    std::span<const std::string> ctx(padded.data() + padded.size() - (n - 1),
                                     static_cast<std::size_t>(n - 1));
    const auto& level = levels_[static_cast<std::size_t>(n - 1)];
    auto it = level.find(join_context(ctx));
    if (it != level.end() && it->second.total > 0) return it->second;
  }
  return levels_[0].at("");
}

double NGramModel::probability(std::span<const std::string> context, const std::string& word) const {
  const auto& cc = lookup(context);
  const double outcomes = static_cast<double>(vocab_.size() + 1);
  auto it = cc.next.find(to_lower(word));
  const double c = it == cc.next.end() ? 0.0 : static_cast<double>(it->second);
  return (c + k_) / (static_cast<double>(cc.total) + k_ * outcomes);
}

std::vector<TokenCandidate> NGramModel::next_tokens(std::span<const std::string> context,
                                                    int top_k) const {
  if (top_k < 1) throw InvalidInput("top_k must be positive");
  const auto& cc = lookup(context);
  const double denom = static_cast<double>(cc.total) + k_ * static_cast<double>(vocab_.size() + 1);
  std::vector<std::pair<std::uint64_t, const std::string*>> seen;
  for (const auto& [word, count] : cc.next) {
    if (word != kEnd) seen.emplace_back(count, &word);
  }
  std::stable_sort(seen.begin(), seen.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<TokenCandidate> out;
  const auto limit = static_cast<std::size_t>(top_k);
  for (const auto& [count, word] : seen) {
    if (out.size() == limit) break;
    out.push_back({*word, std::log((static_cast<double>(count) + k_) / denom), 0});
  }
  // Unseen words all share probability k / denom; vocab_ is sorted.
  const double unseen = std::log(k_ / denom);
  for (const auto& word : vocab_) {
    if (out.size() == limit) break;
    if (cc.next.contains(word)) continue;
    out.push_back({word, unseen, 0});
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::vector<double> NGramModel::score(std::span<const std::string> tokens) const {
  std::vector<std::string> words = lowered(tokens);
  std::vector<double> out;
  out.reserve(words.size() + 1);
  for (std::size_t i = 0; i <= words.size(); ++i) {
    std::span<const std::string> ctx(words.data(), i);
    out.push_back(std::log(probability(ctx, i < words.size() ? words[i] : std::string(kEnd))));
  }
  return out;
}

void NGramModel::save(std::ostream& out) const {
  out << "# twister ngram counts v1\n";
  out << "order " << order_ << "\n";
  out << "k " << format_double(k_) << "\n";
  for (int n = 1; n <= order_; ++n) {
    for (const auto& [ctx, cc] : levels_[static_cast<std::size_t>(n - 1)]) {
      for (const auto& [word, count] : cc.next) {
        out << "count " << n << ' ' << count << ' ';
        if (!ctx.empty()) out << ctx << ' ';
        out << word << "\n";
      }
    }
  }
}

NGramModel NGramModel::read(std::istream& in, const std::string& source) {
  NGramModel m;
  bool have_order = false, have_k = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split_whitespace(t);
    try {
      if (f[0] == "order" && f.size() == 2) {
        m.order_ = std::stoi(f[1]);
        if (m.order_ < 1 || m.order_ > 3) throw ParseError(source, lineno, "order must be 1..3");
        m.levels_.assign(static_cast<std::size_t>(m.order_), {});
        have_order = true;
      } else if (f[0] == "k" && f.size() == 2) {
        m.k_ = std::stod(f[1]);
        if (!(m.k_ > 0.0)) throw ParseError(source, lineno, "k must be positive");
        have_k = true;
      } else if (f[0] == "count" && f.size() >= 4) {
        if (!have_order) throw ParseError(source, lineno, "count before order");
        int n = std::stoi(f[1]);
        if (n < 1 || n > m.order_ || f.size() != static_cast<std::size_t>(n) + 3) {
          throw ParseError(source, lineno, "count line does not match its order");
        }
        std::uint64_t count = std::stoull(f[2]);
        std::span<const std::string> ctx(f.data() + 3, static_cast<std::size_t>(n - 1));
        auto& cc = m.levels_[static_cast<std::size_t>(n - 1)][join_context(ctx)];
        cc.total += count;
        cc.next[f.back()] += count;
      } else {
        throw ParseError(source, lineno, "unrecognized line");
      }
    } catch (const std::logic_error&) {
      throw ParseError(source, lineno, "bad number");
    }
  }
  if (!have_order || !have_k) throw ParseError(source, lineno, "missing order or k");
  if (m.levels_[0].find("") == m.levels_[0].end()) throw ParseError(source, lineno, "no unigram counts");
  m.finish();
  return m;
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open n-gram model " + path.string());
  return read(in, path.string());
}

// --- RemoteModel ------------------------------------------------------------

RemoteModel::RemoteModel(RemoteOptions options) : options_(std::move(options)) {
  if (options_.max_retries < 0) throw InvalidInput("max_retries must be non-negative");
}

std::string RemoteModel::post(const std::string& path, const std::string& body) const {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    httplib::Client client(options_.base_url);
    auto usec = static_cast<long>(options_.timeout_seconds * 1e6);
    client.set_connection_timeout(usec / 1000000, usec % 1000000);
    client.set_read_timeout(usec / 1000000, usec % 1000000);
    client.set_write_timeout(usec / 1000000, usec % 1000000);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProviderError(options_.base_url + path + " returned status " +
                              std::to_string(res->status) + ": " + res->body,
                          false, res->status);
    }
    return res->body;
  }
  throw ProviderError(options_.base_url + path + " transport failure after " +
                          std::to_string(options_.max_retries + 1) + " attempts: " + last_error,
                      true);
}

namespace {

json parse_body(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError("malformed " + what + " response: " + e.what(), false);
  }
}

}  // namespace

std::vector<TokenCandidate> RemoteModel::next_tokens(std::span<const std::string> context,
                                                     int top_k) const {
  if (top_k < 1) throw InvalidInput("top_k must be positive");
  json req = {{"context", std::vector<std::string>(context.begin(), context.end())},
              {"top_k", top_k}};
  json res = parse_body(post("/v1/next_token", req.dump()), "next_token");
  std::vector<TokenCandidate> out;
  try {
    for (const auto& c : res.at("candidates")) {
      out.push_back({c.at("token").get<std::string>(), c.at("logprob").get<double>(), 0});
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed next_token response: ") + e.what(), false);
  }
  std::stable_sort(out.begin(), out.end(), [](const TokenCandidate& a, const TokenCandidate& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.token < b.token;
  });
  if (out.size() > static_cast<std::size_t>(top_k)) out.resize(static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::vector<double> RemoteModel::score(std::span<const std::string> tokens) const {
  json req = {{"tokens", std::vector<std::string>(tokens.begin(), tokens.end())}};
  json res = parse_body(post("/v1/score", req.dump()), "score");
  std::vector<double> out;
  try {
    out = res.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed score response: ") + e.what(), false);
  }
  if (out.size() != tokens.size() + 1) {
    throw ProviderError("score response has " + std::to_string(out.size()) +
                            " log-probabilities, expected " + std::to_string(tokens.size() + 1),
                        false);
  }
  return out;
}

std::string RemoteModel::generate(const std::string& prompt, const GenerationParams& params) {
  json req = {{"prompt", prompt},
              {"max_tokens", params.max_tokens},
              {"temperature", params.temperature}};
  json res = parse_body(post("/v1/generate", req.dump()), "generate");
  try {
    return res.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed generate response: ") + e.what(), false);
  }
}

bool RemoteModel::check() const {
  try {
    const std::string probe = "the";
    next_tokens(std::span<const std::string>(&probe, 1), 1);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// --- ModelServer ------------------------------------------------------------

ModelServer::ModelServer(const LanguageModel& model, TextGenerator* generator)
    : model_(model), generator_(generator), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ModelServer::~ModelServer() { stop(); }

void ModelServer::install_routes() {
  auto bad_request = [](httplib::Response& res, const std::string& msg) {
    res.status = 400;
    res.set_content(json{{"error", msg}}.dump(), "application/json");
  };
  server_->Post("/v1/next_token", [this, bad_request](const httplib::Request& req,
                                                      httplib::Response& res) {
    try {
      json body = json::parse(req.body);
      auto context = body.at("context").get<std::vector<std::string>>();
      int top_k = body.at("top_k").get<int>();
      json cands = json::array();
      for (const auto& c : model_.next_tokens(context, top_k)) {
        cands.push_back({{"token", c.token}, {"logprob", c.logprob}});
      }
      res.set_content(json{{"candidates", cands}}.dump(), "application/json");
    } catch (const std::exception& e) {
      bad_request(res, e.what());
    }
  });
  server_->Post("/v1/score", [this, bad_request](const httplib::Request& req,
                                                 httplib::Response& res) {
    try {
      json body = json::parse(req.body);
      auto tokens = body.at("tokens").get<std::vector<std::string>>();
      res.set_content(json{{"logprobs", model_.score(tokens)}}.dump(), "application/json");
    } catch (const std::exception& e) {
      bad_request(res, e.what());
    }
  });
  server_->Post("/v1/generate", [this, bad_request](const httplib::Request& req,
                                                    httplib::Response& res) {
    if (!generator_) {
      res.status = 501;
      res.set_content(json{{"error", "generation not supported"}}.dump(), "application/json");
      return;
    }
    try {
      json body = json::parse(req.body);
      GenerationParams params;
      params.max_tokens = body.value("max_tokens", params.max_tokens);
      params.temperature = body.value("temperature", params.temperature);
      std::string text = generator_->generate(body.at("prompt").get<std::string>(), params);
      res.set_content(json{{"text", text}}.dump(), "application/json");
    } catch (const std::exception& e) {
      bad_request(res, e.what());
    }
  });
}

int ModelServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  if (port_ <= 0) throw Error("cannot bind " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ModelServer::serve(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void ModelServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string ModelServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace twister
