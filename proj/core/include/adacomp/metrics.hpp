#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adacomp {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// 1 iff normalize_answer(pred) equals normalize_answer(g) for some gold g.
int exact_match(std::string_view pred, std::span<const std::string> golds);

// Max over golds of bag-of-token F1 on tokenize() output. A pair whose
// normalized answers are identical scores 1, so token_f1 >= exact_match
// always holds. Both token bags empty -> 1; exactly one empty -> 0.
double token_f1(std::string_view pred, std::span<const std::string> golds);
double token_f1(std::string_view pred, std::string_view gold);

// n-gram multiset overlap on tokenize() output, no stemming or stopword
// removal. Zero n-grams on either side yields (0, 0, 0).
PRF rouge_n(std::string_view pred, std::string_view ref, int n);

// Longest common subsequence over tokenize() output.
PRF rouge_l(std::string_view pred, std::string_view ref);

enum class QuerySplit { specific, open_ended };

const char* to_string(QuerySplit split);

// specific iff max(scores) - min(scores) exceeds 0.3. Differences within
// 1e-12 of the threshold count as equal to it.
QuerySplit specificity_split(std::span<const double> relevance_scores);

// Document-to-answer relevance used for the split: token_f1(doc, golds).
std::vector<double> answer_relevance(std::span<const std::string> doc_texts,
                                     std::span<const std::string> golds);

struct ExampleResult {
  std::string example_id;
  std::string prediction;
  double em = 0.0;
  double f1 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rouge_l = 0.0;
  double tokens = 0.0;  // prompt token count
  double k = 0.0;       // documents kept
  double correct = 0.0; // judge verdict, 0 or 1
  std::string split;    // empty when no split was computed
};

struct MetricMeans {
  std::size_t count = 0;
  double em = 0.0;
  double f1 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rouge_l = 0.0;
  double tokens = 0.0;
  double avg_docs = 0.0;
  double accuracy = 0.0;  // mean judge verdict
};

struct EvalReport {
  std::string method;
  MetricMeans overall;
  std::map<std::string, MetricMeans> by_split;
};

// Throws RangeError on empty input.
EvalReport aggregate(std::string method, std::span<const ExampleResult> results);

// ROUGE scores against a gold list: the F of the best-matching gold.
double best_rouge_n(std::string_view pred, std::span<const std::string> golds, int n);
double best_rouge_l(std::string_view pred, std::span<const std::string> golds);

std::string report_to_json(const EvalReport& report);
std::string reports_to_json(std::span<const EvalReport> reports);
// Table layout: method,n,tokens,em,f1,rouge1,rouge2,rouge_l,avg_docs,accuracy
// with quality columns in percent.
std::string reports_to_csv(std::span<const EvalReport> reports);
// Same columns plus a split column, one row per (method, split).
std::string split_reports_to_csv(std::span<const EvalReport> reports);

}  // namespace adacomp
