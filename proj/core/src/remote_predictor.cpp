#include "adacomp/remote_predictor.hpp"

#include "adacomp/error.hpp"
#include "json_util.hpp"

namespace adacomp {

CompressionLabel remote_predict(const RemotePredictorConfig& config,
                                const QAExample& example,
                                const RetrievalSet& retrieval,
                                const AttemptLog& warn) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : retrieval.docs) docs.push_back(d.text);
  const std::string body =
      nlohmann::json{{"query", example.query}, {"docs", std::move(docs)},
                     {"N", retrieval.size()}}
          .dump();
  const RetryPolicy policy{config.timeout_ms, config.max_retries, config.backoff_base_ms};

  std::string response;
  try {
    response = post_json(parse_endpoint(config.endpoint_url), body, {}, policy);
  } catch (const TransportError& e) {
    if (!config.fallback_to_n) throw;
    if (warn) {
      warn("remote predictor unavailable for " + example.id + ", using K(" +
           std::to_string(retrieval.size()) + "): " + e.what());
    }
    return CompressionLabel::k(retrieval.size());
  }

  long long k = -1;
  try {
    const auto j = nlohmann::json::parse(response);
    if (!j.at("k").is_number_integer()) throw ProtocolError(200, "remote predictor 'k' is not an integer");
    k = j.at("k").get<long long>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(200, "malformed remote predictor response: " + response.substr(0, 200));
  }
  if (k < 0 || k > retrieval.size()) {
    throw ProtocolError(200, "remote predictor returned k=" + std::to_string(k) +
                                 " outside 0.." + std::to_string(retrieval.size()));
  }
  return CompressionLabel::k(static_cast<int>(k));
}

RemotePredictor::RemotePredictor(RemotePredictorConfig config, AttemptLog warn)
    : config_(std::move(config)), warn_(std::move(warn)) {
  parse_endpoint(config_.endpoint_url);
}

CompressionLabel RemotePredictor::predict(const QAExample& example,
                                          const RetrievalSet& retrieval) const {
  return remote_predict(config_, example, retrieval, warn_);
}

}  // namespace adacomp
