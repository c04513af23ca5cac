#include "adacomp/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "adacomp/error.hpp"
#include "adacomp/text.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

double harmonic(double p, double r) {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::unordered_map<std::string, int> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::unordered_map<std::string, int> counts;
  const auto size = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= size; ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                     : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

MetricMeans mean_of(std::span<const ExampleResult* const> rows) {
  MetricMeans m;
  m.count = rows.size();
  if (rows.empty()) return m;
  for (const auto* r : rows) {
    m.em += r->em;
    m.f1 += r->f1;
    m.rouge1 += r->rouge1;
    m.rouge2 += r->rouge2;
    m.rouge_l += r->rouge_l;
    m.tokens += r->tokens;
    m.avg_docs += r->k;
    m.accuracy += r->correct;
  }
  const auto n = static_cast<double>(rows.size());
  m.em /= n;
  m.f1 /= n;
  m.rouge1 /= n;
  m.rouge2 /= n;
  m.rouge_l /= n;
  m.tokens /= n;
  m.avg_docs /= n;
  m.accuracy /= n;
  return m;
}

nlohmann::json means_json(const MetricMeans& m) {
  return {{"n", m.count},          {"em", m.em},
          {"f1", m.f1},            {"rouge1", m.rouge1},
          {"rouge2", m.rouge2},    {"rouge_l", m.rouge_l},
          {"tokens", m.tokens},    {"avg_docs", m.avg_docs},
          {"accuracy", m.accuracy}};
}

std::string csv_cells(const MetricMeans& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.1f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f",
                m.count, m.tokens, 100.0 * m.em, 100.0 * m.f1,
                100.0 * m.rouge1, 100.0 * m.rouge2, 100.0 * m.rouge_l,
                m.avg_docs, 100.0 * m.accuracy);
  return buf;
}

}  // namespace

int exact_match(std::string_view pred, std::span<const std::string> golds) {
  const std::string p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

double token_f1(std::string_view pred, std::string_view gold) {
  if (normalize_answer(pred) == normalize_answer(gold)) return 1.0;
  const auto p = tokenize(pred);
  const auto g = tokenize(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::unordered_map<std::string_view, int> bag;
  for (const auto& t : g) ++bag[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  return harmonic(static_cast<double>(common) / p.size(),
                  static_cast<double>(common) / g.size());
}

double token_f1(std::string_view pred, std::span<const std::string> golds) {
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, token_f1(pred, g));
  return best;
}

PRF rouge_n(std::string_view pred, std::string_view ref, int n) {
  if (n < 1) throw RangeError("rouge_n requires n >= 1");
  const auto pc = ngram_counts(tokenize(pred), n);
  const auto rc = ngram_counts(tokenize(ref), n);
  if (pc.empty() || rc.empty()) return {};
  long pred_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [gram, c] : pc) pred_total += c;
  for (const auto& [gram, c] : rc) {
    ref_total += c;
    auto it = pc.find(gram);
    if (it != pc.end()) overlap += std::min(c, it->second);
  }
  PRF out;
  out.precision = static_cast<double>(overlap) / pred_total;
  out.recall = static_cast<double>(overlap) / ref_total;
  out.f = harmonic(out.precision, out.recall);
  return out;
}

PRF rouge_l(std::string_view pred, std::string_view ref) {
  const auto p = tokenize(pred);
  const auto r = tokenize(ref);
  if (p.empty() || r.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(p, r));
  PRF out;
  out.precision = lcs / p.size();
  out.recall = lcs / r.size();
  out.f = harmonic(out.precision, out.recall);
  return out;
}

double best_rouge_n(std::string_view pred, std::span<const std::string> golds,
                    int n) {
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, rouge_n(pred, g, n).f);
  return best;
}

double best_rouge_l(std::string_view pred, std::span<const std::string> golds) {
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, rouge_l(pred, g).f);
  return best;
}

const char* to_string(QuerySplit split) {
  return split == QuerySplit::specific ? "specific" : "open_ended";
}

QuerySplit specificity_split(std::span<const double> relevance_scores) {
  if (relevance_scores.empty()) {
    throw RangeError("specificity_split needs at least one score");
  }
  const auto [lo, hi] =
      std::minmax_element(relevance_scores.begin(), relevance_scores.end());
  return (*hi - *lo) > 0.3 + 1e-12 ? QuerySplit::specific
                                   : QuerySplit::open_ended;
}

std::vector<double> answer_relevance(std::span<const std::string> doc_texts,
                                     std::span<const std::string> golds) {
  std::vector<double> out;
  out.reserve(doc_texts.size());
  for (const auto& d : doc_texts) out.push_back(token_f1(d, golds));
  return out;
}

EvalReport aggregate(std::string method, std::span<const ExampleResult> results) {
  if (results.empty()) throw RangeError("aggregate over zero results");
  EvalReport report;
  report.method = std::move(method);
  std::vector<const ExampleResult*> all;
  std::map<std::string, std::vector<const ExampleResult*>> splits;
  for (const auto& r : results) {
    all.push_back(&r);
    if (!r.split.empty()) splits[r.split].push_back(&r);
  }
  report.overall = mean_of(all);
  for (const auto& [name, rows] : splits) report.by_split[name] = mean_of(rows);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j = {{"method", report.method},
                      {"overall", means_json(report.overall)}};
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, m] : report.by_split) splits[name] = means_json(m);
  j["by_split"] = std::move(splits);
  return j.dump(2);
}

std::string reports_to_json(std::span<const EvalReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(nlohmann::json::parse(report_to_json(r)));
  return arr.dump(2);
}

std::string reports_to_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "method,n,tokens,em,f1,rouge1,rouge2,rouge_l,avg_docs,accuracy\n";
  for (const auto& r : reports) {
    out << r.method << ',' << csv_cells(r.overall) << '\n';
  }
  return out.str();
}

std::string split_reports_to_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "method,split,n,tokens,em,f1,rouge1,rouge2,rouge_l,avg_docs,accuracy\n";
  for (const auto& r : reports) {
    for (const auto& [name, m] : r.by_split) {
      out << r.method << ',' << name << ',' << csv_cells(m) << '\n';
    }
  }
  return out.str();
}

}  // namespace adacomp
