#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "twister/errors.hpp"
#include "twister/lm.hpp"

using namespace twister;

namespace {

NGramModel train_text(const std::string& text, int order, double k = 1.0) {
  std::istringstream in(text);
  return NGramModel::train(in, order, k);
}

std::vector<std::string> words(const std::string& s) { return split_whitespace(s); }

// Always certain of the next token.
class CertainModel : public LanguageModel {
 public:
  std::vector<TokenCandidate> next_tokens(std::span<const std::string>, int) const override {
    return {{"a", 0.0, 1}};
  }
  std::vector<double> score(std::span<const std::string> tokens) const override {
    return std::vector<double>(tokens.size() + 1, 0.0);
  }
};

// A bare server whose handlers the test controls.
struct RawServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~RawServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("a b a b bigram matches the hand counts") {
  auto m = train_text("a b a b", 2);
  std::vector<std::string> a = {"a"}, b = {"b"}, none;
  CHECK(m.vocabulary() == std::vector<std::string>{"a", "b"});
  CHECK(std::abs(m.probability(a, "b") - 3.0 / 5.0) < 1e-12);
  CHECK(std::abs(m.probability(a, "a") - 1.0 / 5.0) < 1e-12);
  CHECK(std::abs(m.probability(none, "a") - 1.0 / 2.0) < 1e-12);
  CHECK(std::abs(m.probability(b, "a") - 2.0 / 5.0) < 1e-12);
  CHECK(std::abs(m.probability(b, NGramModel::kEnd) - 2.0 / 5.0) < 1e-12);

  auto top = m.next_tokens(a, 5);
  REQUIRE(top.size() == 2);
  CHECK(top[0].token == "b");
  CHECK(top[0].rank == 1);
  CHECK(top[1].rank == 2);

  double expected = std::pow(0.5 * 0.6 * 0.4 * 0.6 * 0.4, -1.0 / 5.0);
  auto toks = words("a b a b");
  CHECK(std::abs(perplexity(m, toks) - expected) < 1e-9);
}

TEST_CASE("uniform unigram") {
  auto m = train_text("x y\ny x\n", 1);
  std::vector<std::string> none;
  CHECK(m.probability(none, "x") == doctest::Approx(1.0 / 3.0));
  auto top = m.next_tokens(none, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].token == "x");
  CHECK(top[1].token == "y");
  CHECK(top[0].logprob == top[1].logprob);
  for (const auto* text : {"x", "y y x", "x x x x"}) {
    auto t = words(text);
    CHECK(std::abs(perplexity(m, t) - 3.0) < 1e-9);
  }
}

TEST_CASE("memorizing trigram") {
  auto m = train_text("the cat sat", 3);
  auto t = words("the cat sat");
  CHECK(std::abs(perplexity(m, t) - 2.5) < 1e-9);
  CHECK(m.vocabulary() == std::vector<std::string>{"cat", "sat", "the"});
}

TEST_CASE("certainty gives perplexity one") {
  CertainModel m;
  auto t = words("a a a");
  CHECK(perplexity(m, t) == 1.0);
  CHECK_THROWS_AS(perplexity(m, std::vector<std::string>{}), InvalidInput);
}

TEST_CASE("own corpus scores best") {
  const std::vector<std::string> corpora = {"red lorry yellow lorry", "six slippery snails slid",
                                            "fresh fried fish fish fresh"};
  std::vector<NGramModel> models;
  for (const auto& c : corpora) models.push_back(train_text(c, 2));
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    auto t = words(corpora[i]);
    double own = perplexity(models[i], t);
    for (std::size_t j = 0; j < models.size(); ++j) CHECK(own <= perplexity(models[j], t));
  }
}

TEST_CASE("every context is a proper distribution") {
  std::ifstream in(testing::data_path("corpus/train.txt"));
  auto m = NGramModel::train(in, 3);
  Rng rng(3);
  const auto& v = m.vocabulary();
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> ctx;
    for (std::size_t n = rng.uniform_index(4); n > 0; --n) ctx.push_back(v[rng.uniform_index(v.size())]);
    if (trial % 5 == 0) ctx.push_back("unseenword");
    double sum = m.probability(ctx, NGramModel::kEnd);
    for (const auto& w : v) sum += m.probability(ctx, w);
    CHECK(std::abs(sum - 1.0) < 1e-9);
    auto top = m.next_tokens(ctx, 50);
    for (std::size_t i = 0; i < top.size(); ++i) {
      CHECK(top[i].rank == static_cast<int>(i + 1));
      if (i) {
        CHECK(top[i - 1].logprob >= top[i].logprob);
        if (top[i - 1].logprob == top[i].logprob) CHECK(top[i - 1].token < top[i].token);
      }
    }
  }
}

TEST_CASE("training errors and serialization") {
  CHECK_THROWS_AS(train_text("", 2), InvalidInput);
  CHECK_THROWS_AS(train_text("  ,, \n", 2), InvalidInput);
  CHECK_THROWS_AS(train_text("a b", 4), InvalidInput);
  CHECK_THROWS_AS(train_text("a b", 2, 0.0), InvalidInput);

  auto a = train_text("Peter Piper picked\na peck of pickled peppers\n", 3, 0.5);
  auto b = train_text("Peter Piper picked\na peck of pickled peppers\n", 3, 0.5);
  std::ostringstream sa, sb;
  a.save(sa);
  b.save(sb);
  CHECK(sa.str() == sb.str());

  std::istringstream back(sa.str());
  auto c = NGramModel::read(back);
  std::ostringstream sc;
  c.save(sc);
  CHECK(sc.str() == sa.str());
  auto t = words("peter piper picked a peck");
  CHECK(perplexity(c, t) == perplexity(a, t));

  std::istringstream bad("# twister ngram counts v1\norder 2\nk 1\ncount 2 x a\n");
  CHECK_THROWS_AS(NGramModel::read(bad), ParseError);
}

TEST_CASE("top_k larger than the vocabulary") {
  auto m = train_text("a b a b", 2);
  std::vector<std::string> ctx = {"a"};
  CHECK(m.next_tokens(ctx, 100).size() == 2);
}

TEST_CASE("remote provider mirrors the served model") {
  auto m = train_text("a b a b\nb a c\n", 2);
  EchoGenerator echo;
  ModelServer server(m, &echo);
  server.start();
  RemoteModel remote({server.base_url(), 5.0, 1});
  CHECK(remote.check());

  std::vector<std::string> ctx = {"a"};
  auto local = m.next_tokens(ctx, 3);
  auto wire = remote.next_tokens(ctx, 3);
  REQUIRE(wire.size() == local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    CHECK(wire[i].token == local[i].token);
    CHECK(wire[i].rank == local[i].rank);
    CHECK(wire[i].logprob == doctest::Approx(local[i].logprob));
  }
  auto t = words("a b c");
  CHECK(perplexity(remote, t) == doctest::Approx(perplexity(m, t)));
  CHECK(remote.generate("say this", {}) == "say this");
}

TEST_CASE("generate sends the configured parameters") {
  RawServer raw;
  nlohmann::json seen;
  raw.server.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  raw.start();
  RemoteModel remote({raw.url(), 5.0, 0});
  CHECK(remote.generate("p", GenerationParams{}) == "ok");
  CHECK(seen["prompt"] == "p");
  CHECK(seen["max_tokens"] == 1000);
  CHECK(seen["temperature"].get<double>() == 0.8);
}

TEST_CASE("remote failures") {
  SUBCASE("non-2xx is not retriable and keeps the status") {
    auto m = train_text("a b", 2);
    ModelServer server(m);
    server.start();
    RemoteModel remote({server.base_url(), 5.0, 2});
    try {
      remote.generate("x", {});
      FAIL("expected an error");
    } catch (const ProviderError& e) {
      CHECK_FALSE(e.retriable());
      CHECK(e.status() == 501);
    }
  }
  SUBCASE("timeouts are retried, then reported as retriable") {
    RawServer raw;
    std::atomic<int> calls{0};
    raw.server.Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(R"({"logprobs":[0,0]})", "application/json");
    });
    raw.start();
    RemoteModel remote({raw.url(), 0.2, 2});
    try {
      remote.score(words("a"));
      FAIL("expected an error");
    } catch (const ProviderError& e) {
      CHECK(e.retriable());
    }
    CHECK(calls.load() == 3);
  }
  SUBCASE("malformed bodies are rejected") {
    RawServer raw;
    raw.server.Post("/v1/score", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"logprobs":[0]})", "application/json");
    });
    raw.start();
    RemoteModel remote({raw.url(), 5.0, 0});
    CHECK_THROWS_AS(remote.score(words("a b")), ProviderError);
  }
  SUBCASE("nobody listening") {
    RemoteModel remote({"http://127.0.0.1:1", 0.5, 1});
    CHECK_FALSE(remote.check());
    try {
      remote.next_tokens(words("a"), 3);
      FAIL("expected an error");
    } catch (const ProviderError& e) {
      CHECK(e.retriable());
    }
  }
}

TEST_CASE("server rejects bad requests") {
  auto m = train_text("a b", 2);
  ModelServer server(m);
  server.start();
  httplib::Client client(server.base_url());
  auto res = client.Post("/v1/next_token", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = client.Post("/v1/next_token", R"({"context":["a"],"top_k":0})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
}
