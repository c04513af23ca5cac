#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adacomp/compressor.hpp"
#include "adacomp/dataset.hpp"
#include "adacomp/generator.hpp"
#include "adacomp/http_generator.hpp"
#include "adacomp/metrics.hpp"
#include "adacomp/predictor.hpp"
#include "adacomp/remote_predictor.hpp"

namespace adacomp {

struct GeneratorSettings {
  enum class Type { mock, http };
  Type type = Type::mock;
  MockOracleConfig mock;
  HttpGeneratorConfig http;
  std::string cache_dir;  // CachedGenerator directory; empty = memory only

  // {"type":"mock", ...MockOracleConfig fields} or
  // {"type":"http", "endpoint_url", "model", ...}.
  static GeneratorSettings from_json(const std::string& text);
};

std::shared_ptr<GeneratorClient> make_generator(const GeneratorSettings& settings,
                                                std::span<const QAExample> examples,
                                                const TemplateRegistry& templates);

struct PredictorSettings {
  enum class Type { linear, fixed, random, remote };
  std::string name;
  Type type = Type::linear;
  std::filesystem::path model;  // linear
  int k = 0;                    // fixed
  std::uint64_t seed = 0;       // random
  int lo = 1, hi = 5;           // random
  RemotePredictorConfig remote;
};

std::shared_ptr<const Predictor> make_predictor(const PredictorSettings& settings,
                                                int max_n);

// Methods: "no_retrieval", "top-<k>", "top_random", "only_doc", "adacomp"
// (first configured predictor), "predictor:<name>", "oracle".
struct PipelineConfig {
  std::filesystem::path examples;
  std::filesystem::path retrievals;
  std::filesystem::path triplets;  // required by "oracle"
  ExampleFormat format = ExampleFormat::qa;
  GeneratorSettings generator;
  JudgeMode judge;
  std::string template_id = "default";
  std::vector<PromptTemplate> templates;
  std::vector<PredictorSettings> predictors;
  std::vector<std::string> methods;
  std::uint64_t random_seed = 7;
  int random_lo = 1;
  int random_hi = 5;
  UnanswerableFallback fallback = UnanswerableFallback::to_n;
  int max_n = 5;
  std::filesystem::path output_dir;
  std::string config_hash;  // sha256 of the config text

  // Relative paths resolve against base_dir. Throws ConfigError for
  // unknown methods, an empty method list, or referenced files that do not
  // exist.
  static PipelineConfig from_json(const std::string& text,
                                  const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  void check_files() const;
};

std::string method_display_name(const std::string& method);

// Everything a method needs to produce per-example results.
struct EvaluationContext {
  const JoinedDataset* dataset = nullptr;
  GeneratorClient* generator = nullptr;
  JudgeMode judge;
  const TemplateRegistry* templates = nullptr;
  std::string template_id = "default";
  UnanswerableFallback fallback = UnanswerableFallback::to_n;
  int max_n = 5;
  std::map<std::string, std::shared_ptr<const Predictor>> predictors;  // name -> predictor
  std::string adaptive_predictor;                          // used by "adacomp"
  std::map<std::string, CompressionLabel> oracle_labels;   // example id -> label
  std::uint64_t random_seed = 7;
  int random_lo = 1;
  int random_hi = 5;
};

struct MethodRun {
  std::string method;
  EvalReport report;
  std::vector<ExampleResult> rows;
  std::size_t generator_calls = 0;
};

MethodRun run_method(const std::string& method, const EvaluationContext& ctx);

struct PipelineRun {
  std::vector<MethodRun> runs;
  std::string table_csv;
  std::string split_csv;
  std::string report_json;
  std::string manifest_json;
};

// Loads data, evaluates every configured method in order with a shared
// response cache, and writes table.csv, table_splits.csv, report.json and
// manifest.json under output_dir (when non-empty).
PipelineRun run_pipeline(const PipelineConfig& config);

struct SweepPoint {
  int k = 0;
  MetricMeans means;
  double accuracy = 0.0;  // judge_correct rate
};

// Fixed-k evaluation for k = 0..max_n.
std::vector<SweepPoint> sweep_document_count(const EvaluationContext& ctx);
// sweep_document_count over the data and generator of a pipeline config.
// Writes sweep.csv and sweep.json under output_dir when it is set.
std::vector<SweepPoint> run_sweep(const PipelineConfig& config);
std::string sweep_to_csv(const std::vector<SweepPoint>& points);
std::string sweep_to_json(const std::vector<SweepPoint>& points);

struct ConfusionRendering {
  std::string text;
  std::string csv;
  std::string json;
};

inline constexpr double kReferencePredictorAccuracy = 0.65;
inline constexpr int kReferenceMargin = 2;

ConfusionRendering report_confusion(const PredictorReport& report);

}  // namespace adacomp
