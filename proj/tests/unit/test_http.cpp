#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "adacomp/error.hpp"
#include "adacomp/http_generator.hpp"
#include "adacomp/remote_predictor.hpp"

using namespace adacomp;

namespace {

// Local server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Prompt simple_prompt() {
  Prompt p;
  p.example_id = "q1";
  p.query = "capital of France";
  p.context_docs = {"Paris is the capital of France."};
  return p;
}

HttpGeneratorConfig config_for(const LocalServer& s) {
  HttpGeneratorConfig c;
  c.endpoint_url = s.url("/generate");
  c.model_name = "test-model";
  c.backoff_base_ms = 1;
  c.timeout_ms = 2000;
  return c;
}

RetrievalSet five_docs() {
  RetrievalSet r;
  r.query_id = "q1";
  for (int i = 1; i <= 5; ++i) r.docs.push_back({"d" + std::to_string(i), "text", 1.0 - 0.1 * i, i});
  return r;
}

}  // namespace

TEST_CASE("parse_endpoint") {
  auto ep = parse_endpoint("http://localhost:8080/v1/completions");
  CHECK(ep.scheme_host == "http://localhost:8080");
  CHECK(ep.path == "/v1/completions");
  CHECK(parse_endpoint("http://h").path == "/");
  CHECK_THROWS_AS(parse_endpoint("https://h/x"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("http:///x"), ConfigError);
}

TEST_CASE("http generator request shape and cache") {
  LocalServer s;
  std::atomic<int> hits{0};
  std::string seen_body;
  std::mutex mu;
  s.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    {
      std::lock_guard lock(mu);
      seen_body = req.body;
    }
    res.set_content(R"({"text":"Paris"})", "application/json");
  });
  HttpGenerator gen(config_for(s));
  CHECK(gen.generate(simple_prompt()) == "Paris");
  CHECK(hits == 1);
  const auto body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 64);
  CHECK(body["prompt"].get<std::string>().find("Document 1: Paris") != std::string::npos);

  // Cached prompt: served without touching the network.
  CHECK(gen.generate(simple_prompt()) == "Paris");
  CHECK(hits == 1);
  CHECK(gen.network_requests() == 1);
  CHECK(gen.cache_hits() == 1);
}

TEST_CASE("http generator retries 500 then succeeds") {
  LocalServer s;
  std::atomic<int> hits{0};
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 500;
      res.set_content("boom", "text/plain");
      return;
    }
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  HttpGenerator gen(config_for(s));
  std::vector<std::string> attempts;
  gen.set_attempt_log([&](const std::string& line) { attempts.push_back(line); });
  CHECK(gen.generate(simple_prompt()) == "ok");
  REQUIRE(attempts.size() == 2);
  CHECK(attempts[0] == "attempt 1: HTTP 500");
  CHECK(attempts[1] == "attempt 2: HTTP 200");
}

TEST_CASE("http generator error statuses") {
  LocalServer s;
  s.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer sekrit") {
      res.status = 401;
      return;
    }
    res.status = 400;
    res.set_content("bad prompt field", "text/plain");
  });
  auto cfg = config_for(s);
  {
    HttpGenerator gen(cfg);
    try {
      gen.generate(simple_prompt());
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.status() == 401);
      CHECK(std::string(e.what()) == "unauthorized");
    }
  }
  ::setenv("ADACOMP_TEST_KEY", "sekrit", 1);
  cfg.api_key_env_var = "ADACOMP_TEST_KEY";
  HttpGenerator gen(cfg);
  try {
    gen.generate(simple_prompt());
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.status() == 400);
    CHECK(std::string(e.what()).find("bad prompt field") != std::string::npos);
  }
  cfg.api_key_env_var = "ADACOMP_TEST_KEY_MISSING_XYZ";
  HttpGenerator missing(cfg);
  CHECK_THROWS_AS(missing.generate(simple_prompt()), ConfigError);
}

TEST_CASE("http generator retries exhausted") {
  LocalServer s;
  std::atomic<int> hits{0};
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  auto cfg = config_for(s);
  cfg.max_retries = 2;
  HttpGenerator gen(cfg);
  CHECK_THROWS_AS(gen.generate(simple_prompt()), ProtocolError);
  CHECK(hits == 3);
}

TEST_CASE("http generator transport failure") {
  HttpGeneratorConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:1/generate";
  cfg.model_name = "m";
  cfg.max_retries = 1;
  cfg.backoff_base_ms = 1;
  cfg.timeout_ms = 500;
  HttpGenerator gen(cfg);
  CHECK_THROWS_AS(gen.generate(simple_prompt()), TransportError);
}

TEST_CASE("chat style adapter") {
  LocalServer s;
  s.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto content = body["messages"][0]["content"].get<std::string>();
    nlohmann::json out = {{"choices", {{{"message", {{"content", content.substr(0, 8)}}}}}}};
    res.set_content(out.dump(), "application/json");
  });
  auto cfg = config_for(s);
  cfg.api_style = HttpGeneratorConfig::ApiStyle::chat;
  HttpGenerator gen(cfg);
  CHECK(gen.generate(simple_prompt()) == "Document");
  CHECK_THROWS_AS(gen.parse_response("{}"), ProtocolError);
}

TEST_CASE("remote predictor") {
  LocalServer s;
  std::atomic<int> reply{2};
  std::string seen;
  s.server().Post("/predict", [&](const httplib::Request& req, httplib::Response& res) {
    seen = req.body;
    res.set_content("{\"k\":" + std::to_string(reply.load()) + "}", "application/json");
  });
  RemotePredictorConfig cfg;
  cfg.endpoint_url = s.url("/predict");
  cfg.backoff_base_ms = 1;
  QAExample ex{"q1", "capital of France", {"Paris"}, {}};
  const auto r = five_docs();

  CHECK(remote_predict(cfg, ex, r) == CompressionLabel::k(2));
  const auto body = nlohmann::json::parse(seen);
  CHECK(body["N"] == 5);
  CHECK(body["docs"].size() == 5);
  CHECK(body["query"] == "capital of France");

  reply = 9;
  CHECK_THROWS_AS(remote_predict(cfg, ex, r), ProtocolError);
  reply = -1;
  CHECK_THROWS_AS(remote_predict(cfg, ex, r), ProtocolError);
}

TEST_CASE("remote predictor timeout falls back to K(N)") {
  LocalServer s;
  s.server().Post("/predict", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(R"({"k":1})", "application/json");
  });
  RemotePredictorConfig cfg;
  cfg.endpoint_url = s.url("/predict");
  cfg.timeout_ms = 100;
  cfg.max_retries = 0;
  QAExample ex{"q1", "capital of France", {"Paris"}, {}};
  CHECK_THROWS_AS(remote_predict(cfg, ex, five_docs()), TransportError);

  cfg.fallback_to_n = true;
  std::vector<std::string> warnings;
  RemotePredictor pred(cfg, [&](const std::string& w) { warnings.push_back(w); });
  CHECK(pred.predict(ex, five_docs()) == CompressionLabel::k(5));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("K(5)") != std::string::npos);
}
