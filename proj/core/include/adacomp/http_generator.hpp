#pragma once

#include <atomic>
#include <memory>
#include <semaphore>
#include <string>

#include "adacomp/generator.hpp"
#include "adacomp/http.hpp"
#include "adacomp/prompt.hpp"

namespace adacomp {

struct HttpGeneratorConfig {
  enum class ApiStyle {
    completion,  // {"model","prompt",...} -> {"text"}
    chat,        // {"model","messages":[...],...} -> choices[0].message.content
  };

  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 64;
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_base_ms = 200;
  std::string api_key_env_var;  // empty: no Authorization header
  std::string cache_dir;        // empty: in-memory cache only
  int max_in_flight = 4;
  ApiStyle api_style = ApiStyle::completion;
};

// Generator backed by a remote LLM endpoint. Responses are cached under
// sha256(model, rendered prompt); a cache hit never touches the network.
class HttpGenerator final : public GeneratorClient {
 public:
  HttpGenerator(HttpGeneratorConfig config, TemplateRegistry templates = {});

  std::string generate(const Prompt& prompt) override;
  std::string fingerprint() const override;

  void set_attempt_log(AttemptLog log) { log_ = std::move(log); }
  std::size_t network_requests() const noexcept { return requests_.load(); }
  std::size_t cache_hits() const noexcept { return hits_.load(); }

  // Request body for a rendered prompt (exposed for tests).
  std::string request_body(const std::string& rendered) const;
  // Extracts the generated text; throws ProtocolError on malformed bodies.
  std::string parse_response(const std::string& body) const;

 private:
  HttpGeneratorConfig config_;
  TemplateRegistry templates_;
  HttpEndpoint endpoint_;
  ResponseCache cache_;
  std::counting_semaphore<1024> in_flight_;
  AttemptLog log_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace adacomp
