#include "adacomp/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "adacomp/text.hpp"

namespace adacomp {
namespace {

constexpr std::array<const char*, 6> kWhWords = {"who", "what", "when",
                                                 "where", "why", "how"};
constexpr double kLengthScale = 512.0;

}  // namespace

FeatureSpec::FeatureSpec(int max_n) : max_n_(max_n) {
  if (max_n < 1) throw RangeError("feature max_n must be >= 1");
  names_.push_back("query_token_count");
  for (const char* w : kWhWords) names_.push_back(std::string("wh_") + w);
  names_.push_back("wh_other");
  names_.push_back("num_docs");
  for (int i = 1; i <= max_n; ++i) names_.push_back("score_" + std::to_string(i));
  for (int i = 1; i < max_n; ++i) names_.push_back("gap_" + std::to_string(i));
  names_.push_back("score_max");
  names_.push_back("score_min");
  names_.push_back("score_mean");
  for (int i = 1; i <= max_n; ++i) names_.push_back("overlap_" + std::to_string(i));
  for (int i = 1; i <= max_n; ++i) names_.push_back("length_" + std::to_string(i));
  names_.push_back("bias");
}

std::string FeatureSpec::hash() const {
  std::string joined;
  for (const auto& n : names_) {
    joined += n;
    joined.push_back(',');
  }
  return hex64(fnv1a64(joined));
}

FeatureVector extract_features(const FeatureSpec& spec, const QAExample& example,
                               const RetrievalSet& retrieval) {
  const int max_n = spec.max_n();
  const int n = std::min(retrieval.size(), max_n);

  std::vector<std::string> query_tokens = tokenize(example.query);
  const auto own_query_tokens = query_tokens;
  for (const auto& turn : example.history) {
    auto t = tokenize(turn.text);
    query_tokens.insert(query_tokens.end(), t.begin(), t.end());
  }

  std::vector<double> x;
  x.reserve(spec.dimension());
  x.push_back(static_cast<double>(query_tokens.size()));

  std::size_t wh = kWhWords.size();  // "other"
  for (const auto& tok : own_query_tokens) {
    auto it = std::find(kWhWords.begin(), kWhWords.end(), tok);
    if (it != kWhWords.end()) {
      wh = static_cast<std::size_t>(it - kWhWords.begin());
      break;
    }
  }
  for (std::size_t i = 0; i <= kWhWords.size(); ++i) x.push_back(i == wh ? 1.0 : 0.0);

  x.push_back(static_cast<double>(retrieval.size()));

  std::vector<double> scores(max_n, 0.0);
  for (int i = 0; i < n; ++i) scores[i] = retrieval.docs[i].score;
  x.insert(x.end(), scores.begin(), scores.end());
  for (int i = 0; i + 1 < max_n; ++i) x.push_back(scores[i] - scores[i + 1]);

  double mx = 0.0, mn = 0.0, mean = 0.0;
  if (n > 0) {
    mx = *std::max_element(scores.begin(), scores.begin() + n);
    mn = *std::min_element(scores.begin(), scores.begin() + n);
    for (int i = 0; i < n; ++i) mean += scores[i];
    mean /= n;
  }
  x.push_back(mx);
  x.push_back(mn);
  x.push_back(mean);

  std::vector<double> lengths(max_n, 0.0);
  for (int i = 0; i < max_n; ++i) {
    if (i < n) {
      const auto doc_tokens = tokenize(retrieval.docs[i].text);
      x.push_back(query_overlap(query_tokens, doc_tokens));
      lengths[i] = static_cast<double>(count_tokens(retrieval.docs[i].text)) / kLengthScale;
    } else {
      x.push_back(0.0);
    }
  }
  x.insert(x.end(), lengths.begin(), lengths.end());
  x.push_back(1.0);

  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite feature for " + example.id);
  }
  return {std::move(x), spec.hash()};
}

}  // namespace adacomp
