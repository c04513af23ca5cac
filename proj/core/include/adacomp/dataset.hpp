#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adacomp/types.hpp"

namespace adacomp {

enum class ExampleFormat { qa, conversational };

ExampleFormat parse_example_format(const std::string& name);

// JSONL readers. Errors carry the 1-based line number of the offending
// record. Blank lines are skipped but still counted.
std::vector<QAExample> parse_examples(std::istream& in, ExampleFormat format);
std::vector<QAExample> load_examples(const std::filesystem::path& path,
                                     ExampleFormat format);
void write_examples(std::ostream& out, std::span<const QAExample> examples);
void save_examples(const std::filesystem::path& path,
                   std::span<const QAExample> examples);

struct RetrievalLoad {
  std::map<std::string, RetrievalSet> sets;
  std::vector<std::string> warnings;  // score monotonicity violations
};

RetrievalLoad parse_retrievals(std::istream& in);
RetrievalLoad load_retrievals(const std::filesystem::path& path);
void write_retrievals(std::ostream& out,
                      const std::map<std::string, RetrievalSet>& sets);
void save_retrievals(const std::filesystem::path& path,
                     const std::map<std::string, RetrievalSet>& sets);

struct JoinedExample {
  QAExample example;
  RetrievalSet retrieval;
};

class JoinedDataset {
 public:
  JoinedDataset() = default;
  JoinedDataset(std::vector<JoinedExample> items,
                std::vector<std::string> dropped_ids);

  const std::vector<JoinedExample>& items() const noexcept { return items_; }
  const std::vector<std::string>& dropped_ids() const noexcept {
    return dropped_;
  }
  std::size_t size() const noexcept { return items_.size(); }
  const JoinedExample* find(const std::string& example_id) const;

 private:
  std::vector<JoinedExample> items_;
  std::vector<std::string> dropped_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Pairs every example with the retrieval set whose query_id equals the
// example id. Output keeps example file order; unmatched ids are reported
// in dropped_ids(). Throws DataError when nothing joins.
JoinedDataset join_dataset(std::span<const QAExample> examples,
                           const std::map<std::string, RetrievalSet>& sets);

// Triplet labels serialize as an integer 0..N or the string "unanswerable".
// When max_n is given, integer labels above it are rejected.
std::vector<AnnotatedTriplet> parse_triplets(std::istream& in,
                                             std::optional<int> max_n = {});
std::vector<AnnotatedTriplet> load_triplets(const std::filesystem::path& path,
                                            std::optional<int> max_n = {});
void write_triplets(std::ostream& out,
                    std::span<const AnnotatedTriplet> triplets);
void save_triplets(const std::filesystem::path& path,
                   std::span<const AnnotatedTriplet> triplets);

// Rejects triplets whose example is absent or whose label exceeds the
// size of the joined retrieval set.
void validate_triplets(std::span<const AnnotatedTriplet> triplets,
                       const JoinedDataset& dataset);

}  // namespace adacomp
