#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "adacomp/dataset.hpp"
#include "adacomp/error.hpp"
#include "adacomp/generator.hpp"
#include "adacomp/prompt.hpp"
#include "adacomp/types.hpp"

namespace adacomp {

// Documents at ranks 1..k in rank order. Throws RangeError unless
// 0 <= k <= N.
std::vector<RankedDocument> select_top_k(const RetrievalSet& retrieval, int k);

struct SearchOptions {
  JudgeMode judge;
  bool include_k0 = true;  // probe the closed-book prompt first
  std::string template_id = "default";
};

// Smallest k whose rank prefix makes the generator answer correctly,
// searching k = (0,) 1, 2, ..., N and stopping at the first success.
// Unanswerable when no prefix works. generator_calls, when given, receives
// the number of generate() invocations. GeneratorError propagates.
CompressionLabel find_optimal_k(const QAExample& example,
                                const RetrievalSet& retrieval,
                                GeneratorClient& client,
                                const SearchOptions& options,
                                const TemplateRegistry& templates = {},
                                std::size_t* generator_calls = nullptr);

struct AnnotationOptions {
  SearchOptions search;
  double max_failure_rate = 0.1;  // abort when failures / examples exceeds this
  int concurrency = 1;
};

struct AnnotationStats {
  std::size_t examples = 0;
  std::size_t annotated = 0;
  std::size_t failed = 0;
  std::size_t unanswerable = 0;
  std::map<int, std::size_t> histogram;  // K(k) counts
  std::size_t generator_calls = 0;       // generate() invocations issued
  std::size_t cache_hits = 0;            // when the client is a CachedGenerator
  std::vector<std::string> failures;     // "<example id>: <message>"

  double cache_hit_rate() const {
    return generator_calls ? static_cast<double>(cache_hits) / generator_calls : 0.0;
  }
  std::string to_json() const;
};

struct AnnotationResult {
  std::vector<AnnotatedTriplet> triplets;  // sorted by example id
  AnnotationStats stats;
};

class AnnotationAborted : public Error {
 public:
  AnnotationAborted(const std::string& what, AnnotationResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const AnnotationResult& partial() const noexcept { return partial_; }

 private:
  AnnotationResult partial_;
};

// Labels every joined example. Examples whose generator calls fail are
// skipped and listed in stats.failures; if the failure rate exceeds the
// limit the call throws AnnotationAborted carrying the partial result.
// Output is independent of the concurrency level.
AnnotationResult annotate_dataset(const JoinedDataset& dataset,
                                  GeneratorClient& client,
                                  const AnnotationOptions& options,
                                  const TemplateRegistry& templates = {});

}  // namespace adacomp
