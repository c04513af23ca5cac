#pragma once

#include <functional>
#include <string>
#include <vector>

namespace adacomp {

struct HttpEndpoint {
  std::string scheme_host;  // "http://host:port"
  std::string path;         // "/v1/completions"
};

// Splits "http://host[:port]/path". Only plain http is supported.
HttpEndpoint parse_endpoint(const std::string& url);

struct RetryPolicy {
  int timeout_ms = 30000;
  int max_retries = 3;        // additional attempts after the first
  int backoff_base_ms = 200;  // delay before retry i is base * 2^(i-1)
};

using AttemptLog = std::function<void(const std::string&)>;

// POSTs a JSON body and returns the response body on 2xx. Transport
// failures, 429 and 5xx are retried with exponential backoff; 401 fails
// immediately as "unauthorized", other statuses fail immediately with a
// body excerpt. Throws TransportError or ProtocolError.
std::string post_json(const HttpEndpoint& endpoint, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      const RetryPolicy& policy, const AttemptLog& log = {});

}  // namespace adacomp
