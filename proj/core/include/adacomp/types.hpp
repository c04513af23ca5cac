#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace adacomp {

struct Turn {
  std::string role;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct QAExample {
  std::string id;
  std::string query;
  std::vector<std::string> gold_answers;  // aliases; any one counts as correct
  std::vector<Turn> history;              // empty for single-turn QA

  bool operator==(const QAExample&) const = default;
};

struct RankedDocument {
  std::string doc_id;
  std::string text;
  double score = 0.0;
  int rank = 1;  // 1-based position in the retrieval list

  bool operator==(const RankedDocument&) const = default;
};

// Ranked top-N retrieval result for one query. Ranks are always 1..N in
// list order.
struct RetrievalSet {
  std::string query_id;
  std::vector<RankedDocument> docs;

  int size() const noexcept { return static_cast<int>(docs.size()); }
  bool operator==(const RetrievalSet&) const = default;
};

// Minimal number of top-ranked documents the generator needs, or
// Unanswerable when no rank prefix suffices.
class CompressionLabel {
 public:
  static CompressionLabel k(int n) { return CompressionLabel(n); }
  static CompressionLabel unanswerable() { return CompressionLabel(); }

  bool is_unanswerable() const noexcept { return !k_.has_value(); }
  // Precondition: !is_unanswerable().
  int value() const { return *k_; }
  // Unanswerable sorts after every K(n); used for ordering classes.
  int ordinal(int max_n) const noexcept { return k_ ? *k_ : max_n + 1; }

  std::string to_string() const {
    return k_ ? "K(" + std::to_string(*k_) + ")" : "Unanswerable";
  }

  bool operator==(const CompressionLabel&) const = default;

 private:
  CompressionLabel() = default;
  explicit CompressionLabel(int n) : k_(n) {}
  std::optional<int> k_;
};

struct AnnotatedTriplet {
  std::string example_id;
  std::string query_id;
  CompressionLabel label = CompressionLabel::unanswerable();
  std::string generator;  // fingerprint of the generator that produced the label

  bool operator==(const AnnotatedTriplet&) const = default;
};

}  // namespace adacomp
