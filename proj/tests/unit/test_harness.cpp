#include <doctest.h>
#include <json.hpp>

#include "adacomp/error.hpp"
#include "adacomp/harness.hpp"
#include "pipeline_fixture.hpp"

using namespace adacomp;
using nlohmann::json;

namespace {

std::vector<std::string> csv_column(const std::string& csv, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i) std::getline(cells, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST_CASE("method display names") {
  CHECK(method_display_name("top-1") == "Top-1");
  CHECK(method_display_name("top-5") == "Top-5");
  CHECK(method_display_name("top_random") == "Top-Random");
  CHECK(method_display_name("only_doc") == "ONLY_DOC");
  CHECK(method_display_name("adacomp") == "AdaComp");
  CHECK(method_display_name("oracle") == "Oracle");
  CHECK(method_display_name("no_retrieval") == "No Retrieval");
  CHECK(method_display_name("predictor:alt") == "alt");
}

TEST_CASE("pipeline produces the comparison table") {
  testing::TempDir dir;
  const auto f = testing::build_pipeline(
      dir.path(), R"(["no_retrieval","top-1","top-5","top_random","only_doc","adacomp","oracle"])");
  const auto config = PipelineConfig::load(f.config_path);
  const auto run = run_pipeline(config);
  CHECK(csv_column(run.table_csv, 0) ==
        std::vector<std::string>{"No Retrieval", "Top-1", "Top-5", "Top-Random", "ONLY_DOC", "AdaComp", "Oracle"});
  for (const char* name : {"table.csv", "table_splits.csv", "report.json", "manifest.json"}) {
    CHECK(std::filesystem::exists(dir / "out" / name));
  }
  CHECK(testing::read_text(dir / "out" / "table.csv") == run.table_csv);

  const auto manifest = json::parse(run.manifest_json);
  std::size_t sum = 0;
  for (const auto& [k, v] : manifest["generator_calls"]["by_method"].items()) sum += v.get<std::size_t>();
  CHECK(manifest["generator_calls"]["total"] == sum);
  CHECK(sum == 7 * 200);
  CHECK(manifest["cache_hits"].get<std::size_t>() + manifest["backend_calls"].get<std::size_t>() == sum);
  CHECK(manifest["predictors"][0]["model_sha256"].get<std::string>().size() == 64);
  CHECK(manifest["config_hash"] == config.config_hash);

  const auto& oracle = run.runs.back();
  const auto& top5 = run.runs[2];
  CHECK(oracle.report.overall.em >= top5.report.overall.em);
  CHECK(oracle.report.overall.tokens <= top5.report.overall.tokens);
  CHECK(run.runs[0].report.overall.avg_docs == 0.0);
  CHECK(run.runs[1].report.overall.avg_docs == 1.0);

  // Determinism: a second run reproduces the table byte for byte.
  const auto again = run_pipeline(PipelineConfig::load(f.config_path));
  CHECK(again.table_csv == run.table_csv);
  CHECK(again.report_json == run.report_json);
}

TEST_CASE("pipeline config errors") {
  testing::TempDir dir;
  testing::write_text(dir / "e.jsonl", "");
  testing::write_text(dir / "r.jsonl", "");
  auto base = [](const std::string& methods) {
    return R"({"datasets":{"examples":"e.jsonl","retrievals":"r.jsonl"},"methods":)" + methods + "}";
  };
  CHECK_THROWS_WITH_AS(PipelineConfig::from_json(base("[]"), dir.path()), "config error: empty method list",
                       ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(base(R"(["top-1","magic"])"), dir.path()), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(base(R"(["oracle"])"), dir.path()), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(base(R"(["adacomp"])"), dir.path()), ConfigError);
  CHECK_NOTHROW(PipelineConfig::from_json(base(R"(["top-1"])"), dir.path()));
  const std::string missing = R"({"datasets":{"examples":"nope.jsonl","retrievals":"r.jsonl"},"methods":["top-1"]})";
  CHECK_THROWS_WITH_AS(PipelineConfig::from_json(missing, dir.path()),
                       doctest::Contains("missing examples file"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json("{not json", dir.path()), ConfigError);
}

TEST_CASE("document-count sweep") {
  // Evidence depth varies and confusion sets in at 3 distractors.
  CorpusSpec spec;
  spec.seed = 3;
  spec.confusion_threshold = 3;
  const auto corpus = make_synthetic_corpus(spec);
  const auto joined = join_dataset(corpus.examples, corpus.retrievals);
  auto gen = MockGenerator::from_examples(corpus.mock, corpus.examples);
  TemplateRegistry templates;
  EvaluationContext ctx;
  ctx.dataset = &joined;
  ctx.generator = &gen;
  ctx.templates = &templates;
  const auto points = sweep_document_count(ctx);
  REQUIRE(points.size() == 6);
  CHECK(points[0].means.em == 0.0);
  CHECK(points[1].means.em < points[3].means.em);
  CHECK(points[5].means.em < points[3].means.em);
  CHECK(sweep_to_csv(points).rfind("k,n,tokens,em,f1,accuracy\n0,200,", 0) == 0);
  CHECK(json::parse(sweep_to_json(points))["k"].size() == 6);

  // All evidence at rank 1, no confusion: flat after k = 1.
  CorpusSpec flat;
  flat.seed = 4;
  flat.depth_weights = {1, 0, 0, 0, 0};
  const auto c2 = make_synthetic_corpus(flat);
  const auto j2 = join_dataset(c2.examples, c2.retrievals);
  auto g2 = MockGenerator::from_examples(c2.mock, c2.examples);
  ctx.dataset = &j2;
  ctx.generator = &g2;
  const auto p2 = sweep_document_count(ctx);
  for (int k = 1; k <= 5; ++k) CHECK(p2[k].means.em == 1.0);
}

TEST_CASE("report_confusion") {
  const auto classes = class_list(5, UnanswerablePolicy::drop);
  std::vector<std::pair<CompressionLabel, CompressionLabel>> diag, far;
  for (int k = 0; k <= 5; ++k) diag.emplace_back(CompressionLabel::k(k), CompressionLabel::k(k));
  far.emplace_back(CompressionLabel::k(0), CompressionLabel::k(3));
  far.emplace_back(CompressionLabel::k(4), CompressionLabel::k(1));
  const auto d = report_confusion(report_from_pairs(classes, 5, diag));
  const auto dj = json::parse(d.json);
  CHECK(dj["accuracy"] == 1.0);
  CHECK(dj["within_margin"]["2"] == 1.0);
  CHECK(d.text.find("accuracy: 1.0000") != std::string::npos);
  CHECK(d.csv.rfind("true\\pred,0,1,2,3,4,5\n", 0) == 0);
  const auto fj = json::parse(report_confusion(report_from_pairs(classes, 5, far)).json);
  CHECK(fj["within_margin"]["2"] == 0.0);
  CHECK(fj["matrix"][0][3] == 1);
}
