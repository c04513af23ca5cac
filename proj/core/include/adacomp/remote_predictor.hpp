#pragma once

#include <string>

#include "adacomp/http.hpp"
#include "adacomp/predictor.hpp"

namespace adacomp {

// Client for an externally served compression-rate predictor:
// POST {"query","docs":[...],"N"} -> {"k": int}.
struct RemotePredictorConfig {
  std::string endpoint_url;
  int timeout_ms = 10000;
  int max_retries = 2;
  int backoff_base_ms = 200;
  // On transport failure return K(N) and emit a warning instead of throwing.
  bool fallback_to_n = false;
};

// Throws ProtocolError for a malformed body or k outside 0..N, and
// TransportError when the endpoint cannot be reached (unless the fallback
// is enabled).
CompressionLabel remote_predict(const RemotePredictorConfig& config,
                                const QAExample& example,
                                const RetrievalSet& retrieval,
                                const AttemptLog& warn = {});

class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(RemotePredictorConfig config, AttemptLog warn = {});
  CompressionLabel predict(const QAExample& example,
                           const RetrievalSet& retrieval) const override;
  std::string name() const override { return "remote"; }

 private:
  RemotePredictorConfig config_;
  AttemptLog warn_;
};

}  // namespace adacomp
