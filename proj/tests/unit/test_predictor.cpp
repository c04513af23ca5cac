#include <doctest.h>

#include <cmath>
#include <random>

#include "adacomp/error.hpp"
#include "adacomp/features.hpp"
#include "adacomp/predictor.hpp"
#include "adacomp/synthetic.hpp"
#include "test_util.hpp"

using namespace adacomp;
using doctest::Approx;

namespace {

double feature(const FeatureSpec& spec, const FeatureVector& v, const std::string& name) {
  const auto& names = spec.names();
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return v.values[static_cast<std::size_t>(it - names.begin())];
}

RetrievalSet with_scores(std::vector<double> scores) {
  RetrievalSet r;
  r.query_id = "q";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    r.docs.push_back({"d" + std::to_string(i), "Hamlet text here", scores[i], static_cast<int>(i + 1)});
  }
  return r;
}

// Reference loss written directly from the definition, no shared code.
double reference_loss(const std::vector<double>& w, std::size_t c, const std::vector<TrainingExample>& batch,
                      double l2) {
  const std::size_t d = w.size() / c;
  double total = 0;
  for (const auto& ex : batch) {
    std::vector<double> z(c, 0.0);
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t j = 0; j < d; ++j) z[k] += w[k * d + j] * ex.x[j];
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0;
    for (double v : z) s += std::exp(v - m);
    total += -(z[ex.y] - m - std::log(s));
  }
  double reg = 0;
  for (double v : w) reg += v * v;
  return total / static_cast<double>(batch.size()) + l2 * reg;
}

struct Toy {
  FeatureSpec spec{5};
  std::vector<TrainingExample> data;
};

// Separable toy set: class k is signalled by a large value in feature k+1.
Toy toy_data(int per_class, std::uint64_t seed) {
  Toy t;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < per_class; ++i) {
      TrainingExample ex;
      ex.x.assign(t.spec.dimension(), 0.0);
      for (auto& v : ex.x) v = noise(rng);
      ex.x[static_cast<std::size_t>(c) + 1] += 2.0;
      ex.x.back() = 1.0;
      ex.y = c;
      t.data.push_back(ex);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("feature extraction") {
  FeatureSpec spec;
  CHECK(spec.dimension() == 32);
  QAExample ex{"q", "who wrote Hamlet", {"Shakespeare"}, {}};
  const auto v = extract_features(spec, ex, with_scores({0.9, 0.7, 0.5, 0.3, 0.1}));
  REQUIRE(v.values.size() == spec.dimension());
  CHECK(v.spec_hash == spec.hash());
  CHECK(feature(spec, v, "query_token_count") == 3);
  CHECK(feature(spec, v, "wh_who") == 1);
  CHECK(feature(spec, v, "wh_what") == 0);
  CHECK(feature(spec, v, "wh_other") == 0);
  for (int i = 1; i <= 4; ++i) CHECK(feature(spec, v, "gap_" + std::to_string(i)) == Approx(0.2));
  CHECK(feature(spec, v, "score_max") == Approx(0.9));
  CHECK(feature(spec, v, "score_min") == Approx(0.1));
  CHECK(feature(spec, v, "score_mean") == Approx(0.5));
  CHECK(feature(spec, v, "overlap_1") == Approx(1.0 / 3.0));
  CHECK(feature(spec, v, "bias") == 1);

  const auto three = extract_features(spec, ex, with_scores({0.9, 0.8, 0.7}));
  CHECK(feature(spec, three, "num_docs") == 3);
  CHECK(feature(spec, three, "score_4") == 0);
  CHECK(feature(spec, three, "score_5") == 0);
  CHECK(feature(spec, three, "overlap_4") == 0);
  CHECK(feature(spec, three, "length_5") == 0);
  CHECK(feature(spec, three, "score_min") == Approx(0.7));

  QAExample plain{"q", "Hamlet author", {"x"}, {}};
  CHECK(feature(spec, extract_features(spec, plain, with_scores({0.5})), "wh_other") == 1);
  plain.history = {{"user", "who is it"}};
  const auto conv = extract_features(spec, plain, with_scores({0.5}));
  CHECK(feature(spec, conv, "wh_other") == 1);
  CHECK(feature(spec, conv, "query_token_count") == 5);
  CHECK(FeatureSpec(4).hash() != spec.hash());
}

TEST_CASE("softmax") {
  std::vector<double> z = {10, 0, 0, 0, 0, 0};
  const auto p = softmax(z);
  CHECK(p[0] > 0.99);
  std::vector<double> shifted = {1010, 1000, 1000, 1000, 1000, 1000};
  const auto q = softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == Approx(p[i]).epsilon(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> l(7);
    for (auto& v : l) v = u(rng);
    double s = 0;
    for (double v : softmax(l)) s += v;
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("zero model predicts uniformly and ties go to the smallest k") {
  FeatureSpec spec;
  auto model = PredictorModel::zeros(spec, class_list(5, UnanswerablePolicy::drop));
  QAExample ex{"q", "who wrote Hamlet", {"x"}, {}};
  const auto fv = extract_features(spec, ex, with_scores({0.9, 0.5}));
  for (double pr : softmax_predict(model, fv)) CHECK(pr == Approx(1.0 / 6.0));
  CHECK(predict_k(model, ex, with_scores({0.9, 0.5})) == CompressionLabel::k(0));

  const auto classes = class_list(5, UnanswerablePolicy::keep);
  REQUIRE(classes.size() == 7);
  CHECK(classes.back() == CompressionLabel::unanswerable());
  std::vector<double> tie = {0.1, 0.3, 0.0, 0.0, 0.3, 0.0, 0.3};
  CHECK(argmax_label(classes, tie) == CompressionLabel::k(1));
  std::vector<double> peak = {0.1, 0.1, 0.5, 0.1, 0.1, 0.05, 0.05};
  CHECK(argmax_label(classes, peak) == CompressionLabel::k(2));
  std::vector<double> un = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.4};
  CHECK(argmax_label(classes, un) == CompressionLabel::unanswerable());

  FeatureVector wrong = fv;
  wrong.spec_hash = "deadbeef";
  CHECK_THROWS_AS(softmax_predict(model, wrong), IncompatibleModelError);
}

TEST_CASE("batch_loss gradient matches finite differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t c = 2 + rng() % 5;
    const std::size_t d = 1 + rng() % 10;
    std::vector<double> w(c * d);
    for (auto& v : w) v = u(rng);
    std::vector<TrainingExample> batch(1 + rng() % 6);
    for (auto& ex : batch) {
      ex.x.resize(d);
      for (auto& v : ex.x) v = u(rng);
      ex.y = static_cast<int>(rng() % c);
    }
    const double l2 = 0.01;
    std::vector<double> grad;
    const double loss = batch_loss(w, c, batch, l2, &grad);
    CHECK(loss == Approx(reference_loss(w, c, batch, l2)).epsilon(1e-12));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double h = 1e-5;
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double num = (reference_loss(wp, c, batch, l2) - reference_loss(wm, c, batch, l2)) / (2 * h);
      const double rel = std::abs(num - grad[i]) / std::max({1e-8, std::abs(num), std::abs(grad[i])});
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("training basics") {
  auto toy = toy_data(20, 1);
  TrainConfig cfg;
  cfg.epochs = 50;
  auto result = train_examples(toy.data, toy.spec, cfg);
  CHECK(result.report.initial_loss == Approx(-std::log(1.0 / 6.0)).epsilon(1e-12));
  CHECK(result.report.initial_loss == Approx(1.7918).epsilon(1e-4));
  CHECK(result.report.epoch_loss.back() < result.report.initial_loss);
  CHECK(result.report.train_accuracy >= 0.95);

  auto again = train_examples(toy.data, toy.spec, cfg);
  CHECK(again.model.weights == result.model.weights);

  cfg.learning_rate = 0.0;
  auto frozen = train_examples(toy.data, toy.spec, cfg);
  for (double w : frozen.model.weights) CHECK(w == 0.0);

  std::vector<TrainingExample> single(toy.data.begin(), toy.data.begin() + 5);
  CHECK_THROWS_AS(train_examples(single, toy.spec, TrainConfig{}), TrainingError);

  cfg.learning_rate = 1e308;
  cfg.l2_penalty = 0;
  cfg.warmup_fraction = 0;
  CHECK_THROWS_AS(train_examples(toy.data, toy.spec, cfg), TrainingError);

  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("train config and model json round trip") {
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.learning_rate = 0.125;
  cfg.unanswerable_policy = UnanswerablePolicy::keep;
  const auto back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.unanswerable_policy == UnanswerablePolicy::keep);
  CHECK_THROWS_AS(parse_unanswerable_policy("ignore"), ConfigError);

  auto toy = toy_data(5, 3);
  auto model = train_examples(toy.data, toy.spec, TrainConfig{}).model;
  testing::TempDir dir;
  model.save(dir / "m.json");
  const auto loaded = PredictorModel::load(dir / "m.json");
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.classes == model.classes);
  CHECK(loaded.feature_spec_hash == model.feature_spec_hash);
  CHECK(loaded.to_json() == model.to_json());

  auto text = model.to_json();
  const auto pos = text.find(model.feature_spec_hash);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, model.feature_spec_hash.size(), std::string(model.feature_spec_hash.size(), '0'));
  const auto stale = PredictorModel::from_json(text);
  QAExample ex{"q", "who", {"x"}, {}};
  CHECK_THROWS_AS(predict_k(stale, ex, with_scores({0.5})), IncompatibleModelError);
}

TEST_CASE("report_from_pairs against a brute-force tally") {
  const auto classes = class_list(5, UnanswerablePolicy::keep);
  std::mt19937_64 rng(8);
  std::vector<std::pair<CompressionLabel, CompressionLabel>> pairs;
  std::vector<std::vector<std::size_t>> tally(7, std::vector<std::size_t>(7, 0));
  std::size_t within[3] = {0, 0, 0};
  for (int i = 0; i < 500; ++i) {
    const int t = static_cast<int>(rng() % 7), p = static_cast<int>(rng() % 7);
    pairs.emplace_back(classes[t], classes[p]);
    ++tally[t][p];
    for (int m = 0; m < 3; ++m) within[m] += std::abs(t - p) <= m;
  }
  const auto rep = report_from_pairs(classes, 5, pairs);
  CHECK(rep.confusion == tally);
  CHECK(rep.total == 500);
  std::size_t diag = 0;
  for (int i = 0; i < 7; ++i) diag += tally[i][i];
  CHECK(rep.accuracy == Approx(diag / 500.0));
  for (int m = 0; m < 3; ++m) CHECK(rep.within_margin[m] == Approx(within[m] / 500.0));
  const auto back = PredictorReport::from_json(rep.to_json());
  CHECK(back.confusion == rep.confusion);

  std::vector<std::pair<CompressionLabel, CompressionLabel>> perfect;
  for (int k = 0; k <= 5; ++k) perfect.emplace_back(CompressionLabel::k(k), CompressionLabel::k(k));
  const auto p = report_from_pairs(class_list(5, UnanswerablePolicy::drop), 5, perfect);
  CHECK(p.accuracy == 1.0);
  CHECK(p.within_margin[2] == 1.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(p.confusion[i][j] == (i == j ? 1u : 0u));

  std::vector<std::pair<CompressionLabel, CompressionLabel>> far = {{CompressionLabel::k(0), CompressionLabel::k(3)},
                                                                    {CompressionLabel::k(5), CompressionLabel::k(2)}};
  CHECK(report_from_pairs(class_list(5, UnanswerablePolicy::drop), 5, far).within_margin[2] == 0.0);
}

TEST_CASE("baselines") {
  QAExample ex{"q", "who", {"x"}, {}};
  const auto r = with_scores({0.9, 0.8, 0.7, 0.6, 0.5});
  CHECK(FixedKPredictor(5, 5).predict(ex, r) == CompressionLabel::k(5));
  CHECK(FixedKPredictor(1, 5).name() == "top-1");
  CHECK_THROWS_AS(FixedKPredictor(6, 5), RangeError);
  CHECK_THROWS_AS(RandomKPredictor(7, 0, 5, 5), RangeError);
  CHECK_THROWS_AS(RandomKPredictor(7, 3, 2, 5), RangeError);

  RandomKPredictor rnd(7, 1, 5, 5);
  double sum = 0;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 10000; ++i) {
    const int k = rnd.draw("ex" + std::to_string(i));
    REQUIRE(k >= 1);
    REQUIRE(k <= 5);
    ++counts[k];
    sum += k;
  }
  CHECK(std::abs(sum / 10000 - 3.0) < 0.05);
  for (int k = 1; k <= 5; ++k) CHECK(counts[k] > 1800);
  CHECK(rnd.draw("same") == rnd.draw("same"));
}

TEST_CASE("train and evaluate on annotated synthetic data") {
  CorpusSpec spec;
  spec.seed = 5;
  spec.size = 300;
  spec.paraphrase_rate = 0.0;
  auto corpus = make_synthetic_corpus(spec);
  const auto joined = join_dataset(corpus.examples, corpus.retrievals);
  std::vector<AnnotatedTriplet> triplets;
  for (const auto& p : corpus.plan) triplets.push_back({p.example_id, p.example_id, p.label, "plan"});
  std::vector<AnnotatedTriplet> train_part(triplets.begin(), triplets.begin() + 200);
  std::vector<AnnotatedTriplet> test_part(triplets.begin() + 200, triplets.end());
  TrainConfig cfg;
  cfg.epochs = 60;
  auto result = train(train_part, joined, cfg);
  const auto rep = evaluate_predictor(result.model, test_part, joined);
  CHECK(rep.total == 100);
  CHECK(rep.accuracy > 1.0 / 6.0);
  CHECK_THROWS_AS(evaluate_predictor(result.model, {}, joined), RangeError);

  LinearPredictor lp(result.model);
  const auto& ex = joined.items().front();
  CHECK(lp.predict(ex.example, ex.retrieval) == predict_k(result.model, ex.example, ex.retrieval));
}
