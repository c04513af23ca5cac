#include "adacomp/http.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

#include "adacomp/error.hpp"

namespace adacomp {
namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpEndpoint parse_endpoint(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0) {
    throw ConfigError("endpoint must start with http:// : " + url);
  }
  const auto slash = url.find('/', prefix.size());
  HttpEndpoint ep;
  ep.scheme_host = url.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (ep.scheme_host.size() == prefix.size()) {
    throw ConfigError("endpoint has no host: " + url);
  }
  return ep;
}

std::string post_json(const HttpEndpoint& endpoint, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      const RetryPolicy& policy, const AttemptLog& log) {
  httplib::Client client(endpoint.scheme_host);
  const auto timeout = std::chrono::milliseconds(policy.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  std::string last_error;
  int last_status = 0;
  const int attempts = 1 + std::max(0, policy.max_retries);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      const long delay = static_cast<long>(policy.backoff_base_ms) << (attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    auto res = client.Post(endpoint.path, hdrs, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      if (log) log("attempt " + std::to_string(attempt) + ": " + last_error);
      continue;
    }
    if (log) log("attempt " + std::to_string(attempt) + ": HTTP " +
                 std::to_string(res->status));
    if (res->status >= 200 && res->status < 300) return res->body;
    if (res->status == 401) throw ProtocolError(401, "unauthorized");
    if (!retryable(res->status)) {
      throw ProtocolError(res->status, "HTTP " + std::to_string(res->status) +
                                           ": " + excerpt(res->body));
    }
    last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
    last_status = res->status;
  }
  if (last_status != 0) throw ProtocolError(last_status, last_error);
  throw TransportError("request to " + endpoint.scheme_host + endpoint.path +
                       " failed after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

}  // namespace adacomp
