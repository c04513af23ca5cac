#include <doctest.h>

#include <atomic>
#include <sstream>

#include "adacomp/annotator.hpp"
#include "adacomp/error.hpp"
#include "adacomp/synthetic.hpp"
#include "test_util.hpp"

using namespace adacomp;

namespace {

RetrievalSet docs_for(const std::string& id, const std::vector<std::string>& texts) {
  RetrievalSet r;
  r.query_id = id;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    r.docs.push_back({id + "_d" + std::to_string(i + 1), texts[i], 0.9 - 0.1 * i, static_cast<int>(i + 1)});
  }
  return r;
}

std::vector<std::string> filler(int evidence_rank, int n = 5) {
  std::vector<std::string> texts;
  for (int i = 1; i <= n; ++i) {
    texts.push_back(i == evidence_rank ? "Hamlet was written by William Shakespeare." : "Filler text number " + std::to_string(i) + ".");
  }
  return texts;
}

// Brute force: evaluate the judge on every prefix and take the first success.
CompressionLabel brute_force_label(const QAExample& ex, const RetrievalSet& r, GeneratorClient& gen,
                                   bool include_k0) {
  std::vector<bool> ok;
  for (int k = 0; k <= r.size(); ++k) {
    Prompt p;
    p.example_id = ex.id;
    p.query = ex.query;
    for (int i = 0; i < k; ++i) p.context_docs.push_back(r.docs[i].text);
    ok.push_back(judge_correct(gen.generate(p), ex.gold_answers, JudgeMode{}));
  }
  for (int k = include_k0 ? 0 : 1; k <= r.size(); ++k) {
    if (ok[k]) return CompressionLabel::k(k);
  }
  return CompressionLabel::unanswerable();
}

class FailingClient final : public GeneratorClient {
 public:
  std::string generate(const Prompt&) override { throw TransportError("timed out"); }
  std::string fingerprint() const override { return "failing"; }
};

}  // namespace

TEST_CASE("select_top_k") {
  const auto r = docs_for("q", filler(1));
  const auto three = select_top_k(r, 3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].rank == 1);
  CHECK(three[2].rank == 3);
  CHECK(select_top_k(r, 0).empty());
  CHECK_THROWS_AS(select_top_k(r, 6), RangeError);
  CHECK_THROWS_AS(select_top_k(r, -1), RangeError);
}

TEST_CASE("find_optimal_k on hand-built examples") {
  QAExample ex{"q1", "who wrote Hamlet", {"Shakespeare"}, {}};
  auto gen = MockGenerator::from_examples({}, std::span(&ex, 1));
  SearchOptions opt;
  std::size_t calls = 0;
  CHECK(find_optimal_k(ex, docs_for("q1", filler(2)), gen, opt, {}, &calls) == CompressionLabel::k(2));
  CHECK(calls == 3);
  CHECK(find_optimal_k(ex, docs_for("q1", filler(1)), gen, opt) == CompressionLabel::k(1));
  CHECK(find_optimal_k(ex, docs_for("q1", filler(0)), gen, opt, {}, &calls) == CompressionLabel::unanswerable());
  CHECK(calls == 6);
  for (int d = 1; d <= 5; ++d) {
    const auto r = docs_for("q1", filler(d));
    CHECK(find_optimal_k(ex, r, gen, opt) == brute_force_label(ex, r, gen, true));
  }

  MockOracleConfig known;
  known.closed_book_ids = {"q1"};
  auto knows = MockGenerator::from_examples(known, std::span(&ex, 1));
  CHECK(find_optimal_k(ex, docs_for("q1", filler(3)), knows, opt) == CompressionLabel::k(0));
  opt.include_k0 = false;
  CHECK(find_optimal_k(ex, docs_for("q1", filler(3)), knows, opt) == CompressionLabel::k(3));
}

TEST_CASE("synthetic corpus is deterministic and matches its plan") {
  CorpusSpec spec;
  spec.seed = 17;
  spec.none_weight = 0.5;  // 10% of total mass
  const auto a = make_synthetic_corpus(spec);
  const auto b = make_synthetic_corpus(spec);
  CHECK(a.examples == b.examples);
  CHECK(a.retrievals == b.retrievals);
  CHECK(a.plan == b.plan);
  REQUIRE(a.examples.size() == 200);
  REQUIRE(a.plan.size() == 200);
  int unanswerable = 0;
  for (const auto& p : a.plan) unanswerable += p.label.is_unanswerable();
  CHECK(unanswerable > 5);
  CHECK(unanswerable < 40);

  spec.seed = 18;
  CHECK_FALSE(make_synthetic_corpus(spec).examples == a.examples);

  for (const auto& [id, r] : a.retrievals) {
    REQUIRE(r.size() == 5);
    for (int i = 1; i < r.size(); ++i) CHECK(r.docs[i - 1].score >= r.docs[i].score);
  }
  // Exactly one answer-bearing doc, at the planned rank.
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    const auto& ex = a.examples[i];
    const auto& r = a.retrievals.at(ex.id);
    int found = 0, at = 0;
    for (const auto& d : r.docs) {
      if (contains_answer(d.text, ex.gold_answers)) {
        ++found;
        at = d.rank;
      }
    }
    if (a.plan[i].evidence_rank) {
      CHECK(found == 1);
      CHECK(at == *a.plan[i].evidence_rank);
    } else {
      CHECK(found == 0);
    }
  }
}

TEST_CASE("corpus spec validation and json") {
  CorpusSpec spec;
  spec.depth_weights = {1, -1, 1, 1, 1};
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec.depth_weights = {0, 0, 0, 0, 0};
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec.depth_weights = {1, 2, 3};
  CHECK_THROWS(spec.validate());

  CorpusSpec s;
  s.seed = 3;
  s.confusion_threshold = 2;
  s.closed_book_weight = 0.25;
  const auto back = CorpusSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK(back.confusion_threshold == 2);

  CHECK(intended_label(3, false, true, std::nullopt) == CompressionLabel::k(3));
  CHECK(intended_label(3, false, true, 3) == CompressionLabel::k(3));
  CHECK(intended_label(4, false, true, 3) == CompressionLabel::unanswerable());
  CHECK(intended_label(2, true, true, 3) == CompressionLabel::k(0));
  CHECK(intended_label(2, true, false, 3) == CompressionLabel::k(2));
  CHECK(intended_label(std::nullopt, false, true, {}) == CompressionLabel::unanswerable());
}

TEST_CASE("annotate_dataset reproduces the plan") {
  CorpusSpec spec;
  spec.seed = 99;
  spec.closed_book_weight = 0.5;
  spec.none_weight = 0.5;
  spec.confusion_threshold = 3;
  spec.decoy_rate = 0.3;
  spec.paraphrase_rate = 0.3;
  const auto corpus = make_synthetic_corpus(spec);
  const auto joined = join_dataset(corpus.examples, corpus.retrievals);
  auto mock = std::make_shared<MockGenerator>(MockGenerator::from_examples(corpus.mock, corpus.examples));
  CachedGenerator gen(mock);

  AnnotationOptions opt;
  opt.concurrency = 4;
  const auto result = annotate_dataset(joined, gen, opt);
  REQUIRE(result.triplets.size() == 200);
  CHECK(result.stats.failed == 0);
  CHECK(result.stats.generator_calls <= 200 * 6);
  std::map<std::string, CompressionLabel> planned;
  for (const auto& p : corpus.plan) planned.emplace(p.example_id, p.label);
  std::size_t unanswerable = 0;
  for (std::size_t i = 0; i < result.triplets.size(); ++i) {
    const auto& t = result.triplets[i];
    CHECK(t.label == planned.at(t.example_id));
    CHECK(t.generator == gen.fingerprint());
    if (i > 0) CHECK(result.triplets[i - 1].example_id < t.example_id);
    unanswerable += t.label.is_unanswerable();
  }
  CHECK(result.stats.unanswerable == unanswerable);

  // Second pass is served from the cache and is concurrency independent.
  opt.concurrency = 1;
  const auto again = annotate_dataset(joined, gen, opt);
  CHECK(again.triplets == result.triplets);
  CHECK(again.stats.cache_hits == again.stats.generator_calls);
  CHECK(again.stats.cache_hit_rate() == 1.0);
  CHECK(again.stats.histogram == result.stats.histogram);
}

TEST_CASE("annotation aborts past the failure limit") {
  QAExample ex{"only", "who wrote Hamlet", {"Shakespeare"}, {}};
  std::map<std::string, RetrievalSet> sets = {{"only", docs_for("only", filler(1))}};
  const auto joined = join_dataset(std::span(&ex, 1), sets);
  FailingClient bad;
  try {
    annotate_dataset(joined, bad, AnnotationOptions{});
    FAIL("expected abort");
  } catch (const AnnotationAborted& e) {
    CHECK(e.partial().triplets.empty());
    CHECK(e.partial().stats.failed == 1);
    REQUIRE(e.partial().stats.failures.size() == 1);
    CHECK(e.partial().stats.failures[0].find("only") == 0);
  }
}

TEST_CASE("failures under the limit are skipped, not labeled") {
  std::vector<QAExample> examples;
  std::map<std::string, RetrievalSet> sets;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "e" + std::to_string(10 + i);
    examples.push_back({id, "who wrote Hamlet", {"Shakespeare"}, {}});
    sets.emplace(id, docs_for(id, filler(1 + i % 5)));
  }
  const auto joined = join_dataset(examples, sets);
  class Flaky final : public GeneratorClient {
   public:
    explicit Flaky(MockGenerator inner) : inner_(std::move(inner)) {}
    std::string generate(const Prompt& p) override {
      if (p.example_id == "e15") throw TransportError("down");
      return inner_.generate(p);
    }
    std::string fingerprint() const override { return "flaky"; }

   private:
    MockGenerator inner_;
  } flaky(MockGenerator::from_examples({}, examples));
  const auto result = annotate_dataset(joined, flaky, AnnotationOptions{});
  CHECK(result.triplets.size() == 19);
  CHECK(result.stats.failed == 1);
  for (const auto& t : result.triplets) CHECK(t.example_id != "e15");
  const auto json = result.stats.to_json();
  CHECK(json.find("\"failed\"") != std::string::npos);
}
