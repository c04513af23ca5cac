#include "adacomp/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "adacomp/compressor.hpp"
#include "json_util.hpp"

namespace adacomp {

std::vector<RankedDocument> select_top_k(const RetrievalSet& retrieval, int k) {
  if (k < 0 || k > retrieval.size()) {
    throw RangeError("k=" + std::to_string(k) + " outside 0.." +
                     std::to_string(retrieval.size()));
  }
  return {retrieval.docs.begin(), retrieval.docs.begin() + k};
}

CompressionLabel find_optimal_k(const QAExample& example,
                                const RetrievalSet& retrieval,
                                GeneratorClient& client,
                                const SearchOptions& options,
                                const TemplateRegistry& templates,
                                std::size_t* generator_calls) {
  if (retrieval.docs.empty()) throw RangeError("find_optimal_k on empty retrieval");
  std::size_t calls = 0;
  const auto publish = [&] {
    if (generator_calls) *generator_calls = calls;
  };
  const int first = options.include_k0 ? 0 : 1;
  for (int k = first; k <= retrieval.size(); ++k) {
    const auto docs = select_top_k(retrieval, k);
    const Prompt prompt = assemble_prompt(example, docs, options.template_id, templates);
    ++calls;
    std::string output;
    try {
      output = client.generate(prompt);
    } catch (...) {
      publish();
      throw;
    }
    if (judge_correct(output, example.gold_answers, options.judge)) {
      publish();
      return CompressionLabel::k(k);
    }
  }
  publish();
  return CompressionLabel::unanswerable();
}

std::string AnnotationStats::to_json() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, n] : histogram) hist[std::to_string(k)] = n;
  return nlohmann::json{{"examples", examples},
                        {"annotated", annotated},
                        {"failed", failed},
                        {"unanswerable", unanswerable},
                        {"label_histogram", std::move(hist)},
                        {"generator_calls", generator_calls},
                        {"cache_hits", cache_hits},
                        {"cache_hit_rate", cache_hit_rate()},
                        {"failures", failures}}
      .dump(2);
}

AnnotationResult annotate_dataset(const JoinedDataset& dataset,
                                  GeneratorClient& client,
                                  const AnnotationOptions& options,
                                  const TemplateRegistry& templates) {
  struct Slot {
    std::optional<CompressionLabel> label;
    std::string error;
    std::size_t calls = 0;
  };
  const auto& items = dataset.items();
  std::vector<Slot> slots(items.size());
  auto* cached = dynamic_cast<CachedGenerator*>(&client);
  const std::size_t hits_before = cached ? cached->hits() : 0;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      Slot& slot = slots[i];
      try {
        slot.label = find_optimal_k(items[i].example, items[i].retrieval, client,
                                    options.search, templates, &slot.calls);
      } catch (const GeneratorError& e) {
        slot.error = e.what();
      }
    }
  };
  const int threads = std::max(1, options.concurrency);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  AnnotationResult result;
  AnnotationStats& stats = result.stats;
  stats.examples = items.size();
  const std::string fingerprint = client.fingerprint();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Slot& slot = slots[i];
    stats.generator_calls += slot.calls;
    if (!slot.label) {
      ++stats.failed;
      stats.failures.push_back(items[i].example.id + ": " + slot.error);
      continue;
    }
    ++stats.annotated;
    if (slot.label->is_unanswerable()) {
      ++stats.unanswerable;
    } else {
      ++stats.histogram[slot.label->value()];
    }
    result.triplets.push_back({items[i].example.id, items[i].retrieval.query_id,
                               *slot.label, fingerprint});
  }
  if (cached) stats.cache_hits = cached->hits() - hits_before;
  std::sort(result.triplets.begin(), result.triplets.end(),
            [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
  std::sort(stats.failures.begin(), stats.failures.end());

  if (stats.examples > 0 &&
      static_cast<double>(stats.failed) / static_cast<double>(stats.examples) >
          options.max_failure_rate) {
    const std::string msg = "annotation aborted: " + std::to_string(stats.failed) +
                            "/" + std::to_string(stats.examples) +
                            " examples failed";
    throw AnnotationAborted(msg, std::move(result));
  }
  return result;
}

}  // namespace adacomp
