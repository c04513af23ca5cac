#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "adacomp/annotator.hpp"
#include "adacomp/dataset.hpp"
#include "adacomp/error.hpp"
#include "adacomp/harness.hpp"
#include "adacomp/http_generator.hpp"
#include "adacomp/predictor.hpp"
#include "adacomp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace adacomp;

namespace {

constexpr int kExitError = 1;
constexpr int kExitAborted = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

JoinedDataset load_joined(const fs::path& examples, const fs::path& retrievals,
                          const std::string& format,
                          std::vector<QAExample>* examples_out = nullptr) {
  auto ex = load_examples(examples, parse_example_format(format));
  auto rs = load_retrievals(retrievals);
  for (const auto& w : rs.warnings) std::cerr << "warning: " << w << '\n';
  auto joined = join_dataset(ex, rs.sets);
  for (const auto& id : joined.dropped_ids()) {
    std::cerr << "warning: example " << id << " has no retrieval set; dropped\n";
  }
  if (examples_out) *examples_out = std::move(ex);
  return joined;
}

struct CorpusArgs {
  fs::path spec_file;
  fs::path out_dir = "corpus";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> size;
  std::optional<int> confusion_threshold;
  bool conversational = false;
};

int make_corpus(const CorpusArgs& a) {
  CorpusSpec spec = a.spec_file.empty() ? CorpusSpec{} : CorpusSpec::from_json(read_file(a.spec_file));
  if (a.seed) spec.seed = *a.seed;
  if (a.size) spec.size = *a.size;
  if (a.confusion_threshold) spec.confusion_threshold = *a.confusion_threshold;
  if (a.conversational) spec.conversational = true;
  const auto corpus = make_synthetic_corpus(spec);

  fs::create_directories(a.out_dir);
  save_examples(a.out_dir / "examples.jsonl", corpus.examples);
  save_retrievals(a.out_dir / "retrievals.jsonl", corpus.retrievals);
  save_plan(a.out_dir / "plan.jsonl", corpus.plan);
  write_file(a.out_dir / "mock.json", mock_config_to_json(corpus.mock) + "\n");
  write_file(a.out_dir / "spec.json", spec.to_json() + "\n");

  std::map<std::string, int> hist;
  for (const auto& p : corpus.plan) ++hist[p.label.to_string()];
  std::cout << "wrote " << corpus.examples.size() << " examples to " << a.out_dir.string() << '\n';
  for (const auto& [label, n] : hist) std::cout << "  " << label << ": " << n << '\n';
  return 0;
}

struct AnnotateArgs {
  fs::path examples, retrievals, out = "triplets.jsonl", stats;
  std::string format = "qa";
  std::string generator = "mock";
  fs::path generator_config;
  std::string judge = "em";
  std::string k0 = "on";
  int concurrency = 1;
  double max_failure_rate = 0.1;
  std::string template_id;
  fs::path cache_dir;
};

int annotate(const AnnotateArgs& a) {
  std::vector<QAExample> examples;
  const auto joined = load_joined(a.examples, a.retrievals, a.format, &examples);

  std::string gen_json = a.generator_config.empty() ? "{}" : read_file(a.generator_config);
  auto settings = GeneratorSettings::from_json(gen_json);
  if ((settings.type == GeneratorSettings::Type::http) != (a.generator == "http")) {
    throw ConfigError("--generator " + a.generator + " does not match the generator config type");
  }
  if (!a.cache_dir.empty()) settings.cache_dir = a.cache_dir.string();
  TemplateRegistry templates;
  auto client = make_generator(settings, examples, templates);

  AnnotationOptions opt;
  opt.search.judge = JudgeMode::parse(a.judge);
  opt.search.include_k0 = a.k0 == "on";
  opt.search.template_id = a.template_id.empty()
                               ? (a.format == "conversational" ? "conversational" : "default")
                               : a.template_id;
  opt.concurrency = a.concurrency;
  opt.max_failure_rate = a.max_failure_rate;

  auto finish = [&](const AnnotationResult& r, const fs::path& out) {
    save_triplets(out, r.triplets);
    if (!a.stats.empty()) write_file(a.stats, r.stats.to_json() + "\n");
    std::cout << "annotated " << r.stats.annotated << "/" << r.stats.examples << " examples ("
              << r.stats.unanswerable << " unanswerable, " << r.stats.failed << " failed), "
              << r.stats.generator_calls << " generator calls, cache hit rate "
              << r.stats.cache_hit_rate() << '\n';
    for (const auto& [k, n] : r.stats.histogram) std::cout << "  K(" << k << "): " << n << '\n';
  };
  try {
    finish(annotate_dataset(joined, *client, opt, templates), a.out);
  } catch (const AnnotationAborted& e) {
    fs::path partial = a.out;
    partial += ".partial";
    finish(e.partial(), partial);
    std::cerr << "error: " << e.what() << "; partial results in " << partial.string() << '\n';
    for (const auto& f : e.partial().stats.failures) std::cerr << "  " << f << '\n';
    return kExitAborted;
  }
  return 0;
}

struct TrainArgs {
  fs::path triplets, examples, retrievals, config, out = "model.json";
  std::string format = "qa";
};

int train_predictor(const TrainArgs& a) {
  const auto joined = load_joined(a.examples, a.retrievals, a.format);
  const auto triplets = load_triplets(a.triplets);
  validate_triplets(triplets, joined);
  const TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_json(read_file(a.config));
  const auto result = train(triplets, joined, cfg);
  result.model.save(a.out);
  const auto& r = result.report;
  std::cout << "trained on " << r.examples << " triplets (" << r.dropped_unanswerable
            << " unanswerable dropped), loss " << r.initial_loss << " -> "
            << (r.epoch_loss.empty() ? r.initial_loss : r.epoch_loss.back()) << ", train accuracy "
            << r.train_accuracy << "\nmodel written to " << a.out.string() << '\n';
  return 0;
}

struct EvalArgs {
  fs::path model, triplets, examples, retrievals, report = "predictor_report.json";
  std::string format = "qa";
};

int eval_predictor(const EvalArgs& a) {
  const auto model = PredictorModel::load(a.model);
  const auto joined = load_joined(a.examples, a.retrievals, a.format);
  const auto triplets = load_triplets(a.triplets);
  validate_triplets(triplets, joined);
  const auto rep = evaluate_predictor(model, triplets, joined);
  write_file(a.report, rep.to_json() + "\n");
  std::cout << report_confusion(rep).text;
  return 0;
}

int run(const fs::path& config) {
  const auto cfg = PipelineConfig::load(config);
  const auto result = run_pipeline(cfg);
  std::cout << result.table_csv;
  if (!cfg.output_dir.empty()) std::cout << "outputs in " << cfg.output_dir.string() << '\n';
  return 0;
}

int sweep(const fs::path& config) {
  const auto cfg = PipelineConfig::load(config);
  std::cout << sweep_to_csv(run_sweep(cfg));
  return 0;
}

struct ReportArgs {
  fs::path eval_report, model, triplets, examples, retrievals, out_dir = ".";
  std::string format = "qa";
};

int report(const ReportArgs& a) {
  PredictorReport rep;
  if (!a.eval_report.empty()) {
    rep = PredictorReport::from_json(read_file(a.eval_report));
  } else {
    if (a.model.empty() || a.triplets.empty() || a.examples.empty() || a.retrievals.empty()) {
      throw ConfigError("report needs --eval-report, or --model --triplets --examples --retrievals");
    }
    const auto model = PredictorModel::load(a.model);
    const auto joined = load_joined(a.examples, a.retrievals, a.format);
    rep = evaluate_predictor(model, load_triplets(a.triplets), joined);
  }
  const auto rendered = report_confusion(rep);
  fs::create_directories(a.out_dir);
  write_file(a.out_dir / "confusion.json", rendered.json + "\n");
  write_file(a.out_dir / "confusion.csv", rendered.csv);
  write_file(a.out_dir / "confusion.txt", rendered.text);
  std::cout << rendered.text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive top-k context compression for retrieval-augmented generation"};
  app.require_subcommand(1);
  const auto formats = CLI::IsMember({"qa", "conversational"});

  CorpusArgs corpus;
  auto* mk = app.add_subcommand("make-corpus", "Generate a synthetic corpus with a label plan");
  mk->add_option("--spec", corpus.spec_file, "Corpus spec JSON")->check(CLI::ExistingFile);
  mk->add_option("--out-dir", corpus.out_dir, "Output directory")->capture_default_str();
  mk->add_option("--seed", corpus.seed, "Override the corpus seed");
  mk->add_option("--size", corpus.size, "Override the number of examples");
  mk->add_option("--confusion-threshold", corpus.confusion_threshold, "Mock confusion threshold");
  mk->add_flag("--conversational", corpus.conversational, "Attach dialogue history");

  AnnotateArgs ann;
  auto* an = app.add_subcommand("annotate", "Label each example with its minimal top-k");
  an->add_option("--examples", ann.examples)->required()->check(CLI::ExistingFile);
  an->add_option("--retrievals", ann.retrievals)->required()->check(CLI::ExistingFile);
  an->add_option("--format", ann.format)->check(formats)->capture_default_str();
  an->add_option("--generator", ann.generator)->check(CLI::IsMember({"mock", "http"}))->capture_default_str();
  an->add_option("--generator-config", ann.generator_config, "Mock or HTTP generator JSON")
      ->check(CLI::ExistingFile);
  an->add_option("--judge", ann.judge, "em or f1:<tau>")->capture_default_str();
  an->add_option("--k0", ann.k0, "Probe the closed-book prompt first")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  an->add_option("--out", ann.out)->capture_default_str();
  an->add_option("--stats", ann.stats, "Write annotation stats JSON");
  an->add_option("--concurrency", ann.concurrency)->check(CLI::Range(1, 256))->capture_default_str();
  an->add_option("--max-failure-rate", ann.max_failure_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  an->add_option("--template", ann.template_id);
  an->add_option("--cache-dir", ann.cache_dir, "Persist generator responses here");

  TrainArgs tr;
  auto* tp = app.add_subcommand("train-predictor", "Train the compression-rate predictor");
  tp->add_option("--triplets", tr.triplets)->required()->check(CLI::ExistingFile);
  tp->add_option("--examples", tr.examples)->required()->check(CLI::ExistingFile);
  tp->add_option("--retrievals", tr.retrievals)->required()->check(CLI::ExistingFile);
  tp->add_option("--format", tr.format)->check(formats)->capture_default_str();
  tp->add_option("--config", tr.config, "Training config JSON")->check(CLI::ExistingFile);
  tp->add_option("--out", tr.out)->capture_default_str();

  EvalArgs ev;
  auto* ep = app.add_subcommand("eval-predictor", "Evaluate a model on held-out triplets");
  ep->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
  ep->add_option("--triplets", ev.triplets)->required()->check(CLI::ExistingFile);
  ep->add_option("--examples", ev.examples)->required()->check(CLI::ExistingFile);
  ep->add_option("--retrievals", ev.retrievals)->required()->check(CLI::ExistingFile);
  ep->add_option("--format", ev.format)->check(formats)->capture_default_str();
  ep->add_option("--report", ev.report)->capture_default_str();

  fs::path run_config;
  auto* rn = app.add_subcommand("run", "Evaluate the configured methods");
  rn->add_option("--config", run_config)->required()->check(CLI::ExistingFile);

  fs::path sweep_config;
  auto* sw = app.add_subcommand("sweep", "Fixed-k sweep for k = 0..N");
  sw->add_option("--config", sweep_config)->required()->check(CLI::ExistingFile);

  ReportArgs rep;
  auto* rp = app.add_subcommand("report", "Render the predictor confusion matrix");
  rp->add_option("--eval-report", rep.eval_report, "Output of eval-predictor")->check(CLI::ExistingFile);
  rp->add_option("--model", rep.model)->check(CLI::ExistingFile);
  rp->add_option("--triplets", rep.triplets)->check(CLI::ExistingFile);
  rp->add_option("--examples", rep.examples)->check(CLI::ExistingFile);
  rp->add_option("--retrievals", rep.retrievals)->check(CLI::ExistingFile);
  rp->add_option("--format", rep.format)->check(formats)->capture_default_str();
  rp->add_option("--out-dir", rep.out_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed()) return make_corpus(corpus);
    if (an->parsed()) return annotate(ann);
    if (tp->parsed()) return train_predictor(tr);
    if (ep->parsed()) return eval_predictor(ev);
    if (rn->parsed()) return run(run_config);
    if (sw->parsed()) return sweep(sweep_config);
    if (rp->parsed()) return report(rep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
