#include "adacomp/harness.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "adacomp/synthetic.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

bool is_top_k(const std::string& method, int* k) {
  if (method.rfind("top-", 0) != 0) return false;
  const std::string digits = method.substr(4);
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    return false;
  }
  *k = std::stoi(digits);
  return true;
}

void check_method(const std::string& method) {
  int k;
  if (method == "no_retrieval" || method == "top_random" || method == "only_doc" ||
      method == "adacomp" || method == "oracle" || is_top_k(method, &k) ||
      (method.rfind("predictor:", 0) == 0 && method.size() > 10)) {
    return;
  }
  throw ConfigError("unknown method '" + method + "'");
}

HttpGeneratorConfig http_from_json(const json& j) {
  HttpGeneratorConfig c;
  c.endpoint_url = j.at("endpoint_url").get<std::string>();
  c.model_name = j.at("model").get<std::string>();
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
  c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
  c.cache_dir = j.value("response_cache_dir", c.cache_dir);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  const std::string style = j.value("api_style", std::string("completion"));
  if (style == "chat") {
    c.api_style = HttpGeneratorConfig::ApiStyle::chat;
  } else if (style != "completion") {
    throw ConfigError("unknown api_style '" + style + "'");
  }
  return c;
}

PredictorSettings predictor_from_json(const json& j, const std::filesystem::path& base,
                                      std::size_t index) {
  PredictorSettings p;
  const std::string type = j.at("type").get<std::string>();
  p.name = j.value("name", type + std::to_string(index));
  if (type == "linear") {
    p.type = PredictorSettings::Type::linear;
    p.model = resolve(base, j.at("model").get<std::string>());
  } else if (type == "fixed") {
    p.type = PredictorSettings::Type::fixed;
    p.k = j.at("k").get<int>();
  } else if (type == "random") {
    p.type = PredictorSettings::Type::random;
    p.seed = j.value("seed", std::uint64_t{0});
    p.lo = j.value("lo", 1);
    p.hi = j.value("hi", 5);
  } else if (type == "remote") {
    p.type = PredictorSettings::Type::remote;
    p.remote.endpoint_url = j.at("endpoint_url").get<std::string>();
    p.remote.timeout_ms = j.value("timeout_ms", p.remote.timeout_ms);
    p.remote.max_retries = j.value("max_retries", p.remote.max_retries);
    p.remote.backoff_base_ms = j.value("backoff_base_ms", p.remote.backoff_base_ms);
    p.remote.fallback_to_n = j.value("fallback_to_n", p.remote.fallback_to_n);
  } else {
    throw ConfigError("unknown predictor type '" + type + "'");
  }
  return p;
}

PromptTemplate template_from_json(const json& j) {
  PromptTemplate t;
  t.id = j.at("id").get<std::string>();
  t.document_format = j.value("document_format", t.document_format);
  t.instruction = j.value("instruction", t.instruction);
  t.closed_book_instruction = j.value("closed_book_instruction", t.closed_book_instruction);
  t.include_history = j.value("include_history", t.include_history);
  t.history_header = j.value("history_header", t.history_header);
  t.turn_format = j.value("turn_format", t.turn_format);
  t.question_format = j.value("question_format", t.question_format);
  return t;
}

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string label_name(const CompressionLabel& l) {
  return l.is_unanswerable() ? "U" : std::to_string(l.value());
}

}  // namespace

GeneratorSettings GeneratorSettings::from_json(const std::string& text) {
  GeneratorSettings s;
  try {
    const json j = json::parse(text);
    const std::string type = j.value("type", std::string("mock"));
    s.cache_dir = j.value("cache_dir", std::string());
    if (type == "mock") {
      s.type = Type::mock;
      s.mock = mock_config_from_json(text);
    } else if (type == "http") {
      s.type = Type::http;
      s.http = http_from_json(j);
    } else {
      throw ConfigError("unknown generator type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid generator config: ") + e.what());
  }
  return s;
}

std::shared_ptr<GeneratorClient> make_generator(const GeneratorSettings& settings,
                                                std::span<const QAExample> examples,
                                                const TemplateRegistry& templates) {
  std::shared_ptr<GeneratorClient> inner;
  if (settings.type == GeneratorSettings::Type::mock) {
    inner = std::make_shared<MockGenerator>(MockGenerator::from_examples(settings.mock, examples));
  } else {
    inner = std::make_shared<HttpGenerator>(settings.http, templates);
  }
  return std::make_shared<CachedGenerator>(std::move(inner), settings.cache_dir);
}

std::shared_ptr<const Predictor> make_predictor(const PredictorSettings& settings,
                                                int max_n) {
  switch (settings.type) {
    case PredictorSettings::Type::linear:
      return std::make_shared<LinearPredictor>(PredictorModel::load(settings.model));
    case PredictorSettings::Type::fixed:
      return std::make_shared<FixedKPredictor>(settings.k, max_n);
    case PredictorSettings::Type::random:
      return std::make_shared<RandomKPredictor>(settings.seed, settings.lo, settings.hi, max_n);
    case PredictorSettings::Type::remote:
      return std::make_shared<RemotePredictor>(
          settings.remote, [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; });
  }
  throw ConfigError("unknown predictor type");
}

PipelineConfig PipelineConfig::from_json(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  PipelineConfig c;
  c.config_hash = sha256_hex(text);
  try {
    const json j = json::parse(text);
    const json& ds = j.at("datasets");
    c.examples = resolve(base_dir, ds.at("examples").get<std::string>());
    c.retrievals = resolve(base_dir, ds.at("retrievals").get<std::string>());
    c.triplets = resolve(base_dir, ds.value("triplets", std::string()));
    c.format = parse_example_format(ds.value("format", std::string("qa")));

    json gen = j.value("generator", json{{"type", "mock"}});
    if (gen.contains("cache_dir")) {
      gen["cache_dir"] = resolve(base_dir, gen["cache_dir"].get<std::string>()).string();
    }
    c.generator = GeneratorSettings::from_json(gen.dump());
    c.judge = JudgeMode::parse(j.value("judge", std::string("em")));
    c.template_id = j.value("template", c.format == ExampleFormat::conversational
                                            ? std::string("conversational")
                                            : std::string("default"));
    if (j.contains("templates")) {
      for (const auto& t : j.at("templates")) c.templates.push_back(template_from_json(t));
    }
    if (j.contains("predictors")) {
      std::size_t i = 0;
      for (const auto& p : j.at("predictors")) c.predictors.push_back(predictor_from_json(p, base_dir, i++));
    }
    if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
      throw ConfigError("config error: empty method list");
    }
    for (const auto& m : j.at("methods")) {
      c.methods.push_back(m.get<std::string>());
      check_method(c.methods.back());
    }
    if (j.contains("top_random")) {
      const json& tr = j.at("top_random");
      c.random_seed = tr.value("seed", c.random_seed);
      c.random_lo = tr.value("lo", c.random_lo);
      c.random_hi = tr.value("hi", c.random_hi);
    }
    c.fallback = parse_fallback(j.value("fallback", std::string("to_n")));
    c.max_n = j.value("max_n", c.max_n);
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  for (const auto& m : c.methods) {
    if (m == "oracle" && c.triplets.empty()) {
      throw ConfigError("method 'oracle' needs datasets.triplets");
    }
    if (m == "adacomp" && c.predictors.empty()) {
      throw ConfigError("method 'adacomp' needs a configured predictor");
    }
    if (m.rfind("predictor:", 0) == 0) {
      const std::string name = m.substr(10);
      bool found = false;
      for (const auto& p : c.predictors) found |= p.name == name;
      if (!found) throw ConfigError("method '" + m + "' names an unknown predictor");
    }
  }
  c.check_files();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_json(read_file(path), path.parent_path());
}

void PipelineConfig::check_files() const {
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(std::string("missing ") + what + " file: " + p.string());
    }
  };
  need(examples, "examples");
  need(retrievals, "retrievals");
  need(triplets, "triplets");
  for (const auto& p : predictors) {
    if (p.type == PredictorSettings::Type::linear) need(p.model, "model");
  }
}

std::string method_display_name(const std::string& method) {
  if (method == "no_retrieval") return "No Retrieval";
  if (method == "top_random") return "Top-Random";
  if (method == "only_doc") return "ONLY_DOC";
  if (method == "adacomp") return "AdaComp";
  if (method == "oracle") return "Oracle";
  int k;
  if (is_top_k(method, &k)) return "Top-" + std::to_string(k);
  if (method.rfind("predictor:", 0) == 0) return method.substr(10);
  return method;
}

MethodRun run_method(const std::string& method, const EvaluationContext& ctx) {
  check_method(method);
  if (!ctx.dataset || !ctx.generator || !ctx.templates) {
    throw ConfigError("evaluation context is incomplete");
  }
  std::shared_ptr<const Predictor> predictor;
  int fixed_k = -1;
  if (method == "no_retrieval") {
    fixed_k = 0;
  } else if (is_top_k(method, &fixed_k)) {
    if (fixed_k > ctx.max_n) throw RangeError("method " + method + " exceeds max_n");
  } else if (method == "top_random") {
    predictor = std::make_shared<RandomKPredictor>(ctx.random_seed, ctx.random_lo,
                                                   ctx.random_hi, ctx.max_n);
  } else if (method == "adacomp" || method.rfind("predictor:", 0) == 0) {
    const std::string name = method == "adacomp" ? ctx.adaptive_predictor : method.substr(10);
    auto it = ctx.predictors.find(name);
    if (it == ctx.predictors.end()) throw ConfigError("no predictor named '" + name + "'");
    predictor = it->second;
  }

  MethodRun run;
  run.method = method_display_name(method);
  for (const auto& item : ctx.dataset->items()) {
    const QAExample& ex = item.example;
    const RetrievalSet& rs = item.retrieval;
    CompressedContext cc;
    if (method == "only_doc") {
      cc = only_doc_select(ex, rs, *ctx.templates, ctx.template_id);
    } else {
      CompressionLabel label = CompressionLabel::unanswerable();
      if (fixed_k >= 0) {
        label = CompressionLabel::k(fixed_k);
      } else if (predictor) {
        label = predictor->predict(ex, rs);
      } else {  // oracle
        auto it = ctx.oracle_labels.find(ex.id);
        if (it != ctx.oracle_labels.end()) label = it->second;
      }
      cc = compress(ex, rs, label, ctx.fallback, *ctx.templates, ctx.template_id);
    }
    const std::string output = ctx.generator->generate(cc.prompt);
    ++run.generator_calls;

    ExampleResult r;
    r.example_id = ex.id;
    r.prediction = output;
    r.em = exact_match(output, ex.gold_answers);
    r.f1 = token_f1(output, ex.gold_answers);
    r.rouge1 = best_rouge_n(output, ex.gold_answers, 1);
    r.rouge2 = best_rouge_n(output, ex.gold_answers, 2);
    r.rouge_l = best_rouge_l(output, ex.gold_answers);
    r.tokens = static_cast<double>(cc.token_count);
    r.k = cc.k;
    r.correct = judge_correct(output, ex.gold_answers, ctx.judge) ? 1.0 : 0.0;
    std::vector<std::string> top;
    for (int i = 0; i < std::min(rs.size(), 5); ++i) top.push_back(rs.docs[i].text);
    r.split = to_string(specificity_split(answer_relevance(top, ex.gold_answers)));
    run.rows.push_back(std::move(r));
  }
  run.report = aggregate(run.method, run.rows);
  return run;
}

namespace {

// Data, templates, predictors and generator for one config. ctx points
// into the other members, so the object is neither copied nor moved.
struct LoadedPipeline {
  explicit LoadedPipeline(const PipelineConfig& config);
  LoadedPipeline(const LoadedPipeline&) = delete;
  LoadedPipeline& operator=(const LoadedPipeline&) = delete;

  std::vector<QAExample> examples;
  JoinedDataset dataset;
  TemplateRegistry templates;
  std::shared_ptr<GeneratorClient> generator;
  CachedGenerator* cached = nullptr;
  EvaluationContext ctx;
};

LoadedPipeline::LoadedPipeline(const PipelineConfig& config) {
  if (config.methods.empty()) throw ConfigError("config error: empty method list");
  config.check_files();

  examples = load_examples(config.examples, config.format);
  auto retrievals = load_retrievals(config.retrievals);
  for (const auto& w : retrievals.warnings) std::cerr << "warning: " << w << '\n';
  dataset = join_dataset(examples, retrievals.sets);
  for (const auto& id : dataset.dropped_ids()) {
    std::cerr << "warning: example " << id << " has no retrieval set; dropped\n";
  }

  for (const auto& t : config.templates) templates.add(t);
  templates.get(config.template_id);

  ctx.dataset = &dataset;
  ctx.judge = config.judge;
  ctx.templates = &templates;
  ctx.template_id = config.template_id;
  ctx.fallback = config.fallback;
  ctx.max_n = config.max_n;
  ctx.random_seed = config.random_seed;
  ctx.random_lo = config.random_lo;
  ctx.random_hi = config.random_hi;
  for (const auto& p : config.predictors) ctx.predictors[p.name] = make_predictor(p, config.max_n);
  if (!config.predictors.empty()) ctx.adaptive_predictor = config.predictors.front().name;
  if (!config.triplets.empty()) {
    const auto triplets = load_triplets(config.triplets);
    validate_triplets(triplets, dataset);
    for (const auto& t : triplets) ctx.oracle_labels.insert_or_assign(t.example_id, t.label);
  }

  generator = make_generator(config.generator, examples, templates);
  cached = dynamic_cast<CachedGenerator*>(generator.get());
  ctx.generator = generator.get();
}

}  // namespace

PipelineRun run_pipeline(const PipelineConfig& config) {
  const LoadedPipeline loaded(config);
  const EvaluationContext& ctx = loaded.ctx;
  const JoinedDataset& dataset = loaded.dataset;
  const auto& generator = loaded.generator;
  auto* cached = loaded.cached;

  PipelineRun out;
  std::vector<EvalReport> reports;
  json calls = json::object();
  for (const auto& m : config.methods) {
    out.runs.push_back(run_method(m, ctx));
    reports.push_back(out.runs.back().report);
    calls[out.runs.back().method] = out.runs.back().generator_calls;
  }
  out.table_csv = reports_to_csv(reports);
  out.split_csv = split_reports_to_csv(reports);
  out.report_json = reports_to_json(reports);

  std::size_t total_calls = 0;
  for (const auto& r : out.runs) total_calls += r.generator_calls;
  json predictors = json::array();
  for (const auto& p : config.predictors) {
    json pj = {{"name", p.name}};
    if (p.type == PredictorSettings::Type::linear) {
      pj["model_sha256"] = sha256_hex(read_file(p.model));
    }
    predictors.push_back(std::move(pj));
  }
  out.manifest_json =
      json{{"config_hash", config.config_hash},
           {"methods", config.methods},
           {"seeds", {{"top_random", config.random_seed}}},
           {"generator_fingerprint", generator->fingerprint()},
           {"predictors", std::move(predictors)},
           {"judge", config.judge.to_string()},
           {"template", config.template_id},
           {"examples", dataset.size()},
           {"dropped_examples", dataset.dropped_ids()},
           {"generator_calls", {{"total", total_calls}, {"by_method", calls}}},
           {"cache_hits", cached ? cached->hits() : 0},
           {"backend_calls", cached ? cached->calls() : total_calls}}
          .dump(2);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_file(config.output_dir / "table.csv", out.table_csv);
    write_file(config.output_dir / "table_splits.csv", out.split_csv);
    write_file(config.output_dir / "report.json", out.report_json + "\n");
    write_file(config.output_dir / "manifest.json", out.manifest_json + "\n");
  }
  return out;
}

std::vector<SweepPoint> sweep_document_count(const EvaluationContext& ctx) {
  std::vector<SweepPoint> points;
  for (int k = 0; k <= ctx.max_n; ++k) {
    const MethodRun run = run_method("top-" + std::to_string(k), ctx);
    points.push_back({k, run.report.overall, run.report.overall.accuracy});
  }
  return points;
}

std::vector<SweepPoint> run_sweep(const PipelineConfig& config) {
  const LoadedPipeline loaded(config);
  auto points = sweep_document_count(loaded.ctx);
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_file(config.output_dir / "sweep.csv", sweep_to_csv(points));
    write_file(config.output_dir / "sweep.json", sweep_to_json(points) + "\n");
  }
  return points;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "k,n,tokens,em,f1,accuracy\n";
  for (const auto& p : points) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%zu,%.1f,%.4f,%.4f,%.4f\n", p.k, p.means.count,
                  p.means.tokens, p.means.em, p.means.f1, p.accuracy);
    out << buf;
  }
  return out.str();
}

std::string sweep_to_json(const std::vector<SweepPoint>& points) {
  json j = {{"k", json::array()}, {"em", json::array()}, {"f1", json::array()},
            {"accuracy", json::array()}, {"tokens", json::array()}};
  for (const auto& p : points) {
    j["k"].push_back(p.k);
    j["em"].push_back(p.means.em);
    j["f1"].push_back(p.means.f1);
    j["accuracy"].push_back(p.accuracy);
    j["tokens"].push_back(p.means.tokens);
  }
  return j.dump(2);
}

ConfusionRendering report_confusion(const PredictorReport& report) {
  ConfusionRendering out;
  const std::size_t c = report.classes.size();

  std::ostringstream csv;
  csv << "true\\pred";
  for (const auto& l : report.classes) csv << ',' << label_name(l);
  csv << '\n';
  for (std::size_t t = 0; t < c; ++t) {
    csv << label_name(report.classes[t]);
    for (std::size_t p = 0; p < c; ++p) csv << ',' << report.confusion[t][p];
    csv << '\n';
  }
  out.csv = csv.str();

  std::ostringstream text;
  text << "confusion matrix (rows: true, columns: predicted)\n";
  char cell[32];
  std::snprintf(cell, sizeof cell, "%6s", "");
  text << cell;
  for (const auto& l : report.classes) {
    std::snprintf(cell, sizeof cell, "%7s", label_name(l).c_str());
    text << cell;
  }
  text << '\n';
  for (std::size_t t = 0; t < c; ++t) {
    std::snprintf(cell, sizeof cell, "%6s", label_name(report.classes[t]).c_str());
    text << cell;
    for (std::size_t p = 0; p < c; ++p) {
      std::snprintf(cell, sizeof cell, "%7zu", report.confusion[t][p]);
      text << cell;
    }
    text << '\n';
  }
  text << "examples: " << report.total << "\n";
  text << "accuracy: " << format_fraction(report.accuracy) << '\n';
  for (int m = 0; m < 3; ++m) {
    text << "within margin " << m << ": " << format_fraction(report.within_margin[m]) << '\n';
  }
  text << "reference (real-data predictor): accuracy ~" << kReferencePredictorAccuracy
       << ", errors mostly within a margin of " << kReferenceMargin << '\n';
  out.text = text.str();

  json cls = json::array();
  for (const auto& l : report.classes) {
    cls.push_back(l.is_unanswerable() ? json("unanswerable") : json(l.value()));
  }
  out.json = json{{"classes", std::move(cls)},
                  {"matrix", report.confusion},
                  {"total", report.total},
                  {"accuracy", report.accuracy},
                  {"within_margin",
                   {{"0", report.within_margin[0]},
                    {"1", report.within_margin[1]},
                    {"2", report.within_margin[2]}}},
                  {"reference", {{"accuracy", kReferencePredictorAccuracy},
                                 {"margin", kReferenceMargin}}}}
                 .dump(2);
  return out;
}

}  // namespace adacomp
