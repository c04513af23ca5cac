#include <benchmark/benchmark.h>

#include <random>

#include "adacomp/annotator.hpp"
#include "adacomp/features.hpp"
#include "adacomp/metrics.hpp"
#include "adacomp/predictor.hpp"
#include "adacomp/synthetic.hpp"

using namespace adacomp;

namespace {

std::string random_sentence(std::mt19937_64& rng, int words) {
  static const char* vocab[] = {"the", "river", "city", "north", "capital", "was", "built", "in", "old", "stone"};
  std::string s;
  for (int i = 0; i < words; ++i) s += std::string(i ? " " : "") + vocab[rng() % 10];
  return s;
}

SyntheticCorpus& corpus() {
  static SyntheticCorpus c = [] {
    CorpusSpec spec;
    spec.seed = 1;
    spec.closed_book_weight = 0.5;
    spec.none_weight = 0.5;
    spec.confusion_threshold = 3;
    return make_synthetic_corpus(spec);
  }();
  return c;
}

void BM_RougeL(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = random_sentence(rng, static_cast<int>(state.range(0)));
  const auto b = random_sentence(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RougeL)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_ExtractFeatures(benchmark::State& state) {
  const auto& c = corpus();
  FeatureSpec spec;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& ex = c.examples[i++ % c.examples.size()];
    benchmark::DoNotOptimize(extract_features(spec, ex, c.retrievals.at(ex.id)));
  }
}
BENCHMARK(BM_ExtractFeatures);

void BM_PredictK(benchmark::State& state) {
  const auto& c = corpus();
  const auto joined = join_dataset(c.examples, c.retrievals);
  std::vector<AnnotatedTriplet> triplets;
  for (const auto& p : c.plan) triplets.push_back({p.example_id, p.example_id, p.label, "plan"});
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto model = train(triplets, joined, cfg).model;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& item = joined.items()[i++ % joined.size()];
    benchmark::DoNotOptimize(predict_k(model, item.example, item.retrieval));
  }
}
BENCHMARK(BM_PredictK);

void BM_AnnotateCorpus(benchmark::State& state) {
  const auto& c = corpus();
  const auto joined = join_dataset(c.examples, c.retrievals);
  auto mock = MockGenerator::from_examples(c.mock, c.examples);
  AnnotationOptions opt;
  opt.concurrency = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(annotate_dataset(joined, mock, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(joined.size()));
}
BENCHMARK(BM_AnnotateCorpus)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
