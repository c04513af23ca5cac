#include "adacomp/http_generator.hpp"

#include <cstdlib>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

int checked_in_flight(int n) {
  if (n < 1 || n > 1024) throw ConfigError("max_in_flight must be in 1..1024");
  return n;
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

HttpGenerator::HttpGenerator(HttpGeneratorConfig config, TemplateRegistry templates)
    : config_(std::move(config)),
      templates_(std::move(templates)),
      endpoint_(parse_endpoint(config_.endpoint_url)),
      cache_(config_.cache_dir),
      in_flight_(checked_in_flight(config_.max_in_flight)) {
  if (config_.model_name.empty()) throw ConfigError("http generator needs a model name");
}

std::string HttpGenerator::fingerprint() const {
  return "http:" + config_.endpoint_url + "|" + config_.model_name;
}

std::string HttpGenerator::request_body(const std::string& rendered) const {
  nlohmann::json body = {{"model", config_.model_name},
                         {"temperature", config_.temperature},
                         {"max_tokens", config_.max_tokens}};
  if (config_.api_style == HttpGeneratorConfig::ApiStyle::chat) {
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", rendered}}});
  } else {
    body["prompt"] = rendered;
  }
  return body.dump();
}

std::string HttpGenerator::parse_response(const std::string& body) const {
  try {
    const auto j = nlohmann::json::parse(body);
    if (config_.api_style == HttpGeneratorConfig::ApiStyle::chat) {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(200, "malformed response body: " + body.substr(0, 200));
  }
}

std::string HttpGenerator::generate(const Prompt& prompt) {
  const std::string rendered = templates_.render(prompt);
  const std::string key = sha256_hex(config_.model_name + '\n' + rendered);
  if (auto hit = cache_.get(key)) {
    ++hits_;
    return *hit;
  }

  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key_env_var.empty()) {
    const char* key_value = std::getenv(config_.api_key_env_var.c_str());
    if (key_value == nullptr) {
      throw ConfigError("environment variable " + config_.api_key_env_var +
                        " is not set");
    }
    headers.emplace_back("Authorization", std::string("Bearer ") + key_value);
  }
  const RetryPolicy policy{config_.timeout_ms, config_.max_retries,
                           config_.backoff_base_ms};

  std::string body;
  {
    SemaphoreGuard guard(in_flight_);
    ++requests_;
    body = post_json(endpoint_, request_body(rendered), headers, policy, log_);
  }
  std::string text = parse_response(body);
  cache_.put(key, text);
  return text;
}

}  // namespace adacomp
