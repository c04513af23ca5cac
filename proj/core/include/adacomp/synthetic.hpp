#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adacomp/generator.hpp"
#include "adacomp/types.hpp"

namespace adacomp {

// Recipe for a synthetic QA corpus with controlled evidence placement.
// Each example draws an outcome: closed-book (the mock model knows the
// answer without documents), "first evidence at rank d" for d in 1..N, or
// no evidence at all.
struct CorpusSpec {
  std::size_t size = 200;
  int max_n = 5;
  double closed_book_weight = 0.0;
  std::vector<double> depth_weights = {1, 1, 1, 1, 1};  // ranks 1..max_n
  double none_weight = 0.0;
  // Mock confusion threshold the intended labels are computed against.
  std::optional<int> confusion_threshold;
  bool include_k0 = true;
  std::uint64_t seed = 0;
  // Probability that a distractor carries a sentence restating the query's
  // subject and relation without the answer.
  double decoy_rate = 0.0;
  // Probability that the evidence sentence is phrased with little lexical
  // overlap with the query.
  double paraphrase_rate = 0.0;
  bool conversational = false;
  std::string id_prefix = "q";

  // Throws DataError for negative or all-zero weights.
  void validate() const;
  static CorpusSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct PlanEntry {
  std::string example_id;
  std::optional<int> evidence_rank;  // rank of the only answer-bearing doc
  bool closed_book = false;
  CompressionLabel label = CompressionLabel::unanswerable();  // intended

  bool operator==(const PlanEntry&) const = default;
};

// Label a mock oracle must produce for an example built this way: K(0)
// for closed-book with the k=0 probe, otherwise K(d) while the d-1
// preceding distractors stay under the confusion threshold.
CompressionLabel intended_label(std::optional<int> evidence_rank, bool closed_book,
                                bool include_k0, std::optional<int> confusion_threshold);

struct SyntheticCorpus {
  std::vector<QAExample> examples;
  std::map<std::string, RetrievalSet> retrievals;
  std::vector<PlanEntry> plan;
  MockOracleConfig mock;  // closed-book ids + confusion threshold
};

// Deterministic under spec.seed.
SyntheticCorpus make_synthetic_corpus(const CorpusSpec& spec);

std::string mock_config_to_json(const MockOracleConfig& config);
MockOracleConfig mock_config_from_json(const std::string& text);

void save_plan(const std::filesystem::path& path, std::span<const PlanEntry> plan);
std::vector<PlanEntry> load_plan(const std::filesystem::path& path);

}  // namespace adacomp
