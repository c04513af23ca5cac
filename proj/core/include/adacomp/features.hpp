#pragma once

#include <string>
#include <vector>

#include "adacomp/types.hpp"

namespace adacomp {

// Fixed feature layout for a maximum retrieval depth. Order:
//   query_token_count, wh one-hot (who what when where why how other),
//   num_docs, score_1..N, gap_1..N-1, score_max/min/mean,
//   overlap_1..N, length_1..N (tokens / 512), bias.
// Slots beyond the available documents are zero.
class FeatureSpec {
 public:
  explicit FeatureSpec(int max_n = 5);

  int max_n() const noexcept { return max_n_; }
  std::size_t dimension() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  // Identifies the layout; stored with trained models.
  std::string hash() const;

 private:
  int max_n_;
  std::vector<std::string> names_;
};

struct FeatureVector {
  std::vector<double> values;
  std::string spec_hash;
};

// Query tokens include the dialogue history of conversational examples.
// Only the first max_n documents are used.
FeatureVector extract_features(const FeatureSpec& spec, const QAExample& example,
                               const RetrievalSet& retrieval);

}  // namespace adacomp
