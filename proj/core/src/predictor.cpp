#include "adacomp/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "adacomp/error.hpp"
#include "adacomp/hashing.hpp"
#include "json_util.hpp"

namespace adacomp {
namespace {

using nlohmann::json;

json label_json(const CompressionLabel& l) {
  return l.is_unanswerable() ? json("unanswerable") : json(l.value());
}

CompressionLabel label_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "unanswerable") {
    return CompressionLabel::unanswerable();
  }
  if (j.is_number_integer() && j.get<int>() >= 0) return CompressionLabel::k(j.get<int>());
  throw DataError("unknown label token " + j.dump());
}

// Maps a triplet label onto the trained class set; nullopt means drop.
std::optional<CompressionLabel> map_label(const CompressionLabel& label, int max_n,
                                          UnanswerablePolicy policy) {
  if (!label.is_unanswerable()) return label;
  switch (policy) {
    case UnanswerablePolicy::drop: return std::nullopt;
    case UnanswerablePolicy::map_to_n: return CompressionLabel::k(max_n);
    case UnanswerablePolicy::keep: return label;
  }
  return std::nullopt;
}

void check_finite_weights(const std::vector<double>& w) {
  for (double v : w) {
    if (!std::isfinite(v)) throw DataError("model weights must be finite");
  }
}

}  // namespace

UnanswerablePolicy parse_unanswerable_policy(const std::string& name) {
  if (name == "drop") return UnanswerablePolicy::drop;
  if (name == "map_to_N" || name == "map_to_n") return UnanswerablePolicy::map_to_n;
  if (name == "keep") return UnanswerablePolicy::keep;
  throw ConfigError("unknown unanswerable_policy '" + name + "'");
}

const char* to_string(UnanswerablePolicy policy) {
  switch (policy) {
    case UnanswerablePolicy::drop: return "drop";
    case UnanswerablePolicy::map_to_n: return "map_to_N";
    case UnanswerablePolicy::keep: return "keep";
  }
  return "drop";
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ConfigError("warmup_fraction must be in [0, 1]");
  }
  if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be >= 0");
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.seed = j.value("seed", c.seed);
    c.l2_penalty = j.value("l2_penalty", c.l2_penalty);
    if (j.contains("unanswerable_policy")) {
      c.unanswerable_policy =
          parse_unanswerable_policy(j.at("unanswerable_policy").get<std::string>());
    }
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainConfig::to_json() const {
  return json{{"learning_rate", learning_rate},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"warmup_fraction", warmup_fraction},
              {"seed", seed},
              {"l2_penalty", l2_penalty},
              {"unanswerable_policy", adacomp::to_string(unanswerable_policy)}}
      .dump();
}

std::vector<CompressionLabel> class_list(int max_n, UnanswerablePolicy policy) {
  std::vector<CompressionLabel> out;
  for (int k = 0; k <= max_n; ++k) out.push_back(CompressionLabel::k(k));
  if (policy == UnanswerablePolicy::keep) out.push_back(CompressionLabel::unanswerable());
  return out;
}

PredictorModel PredictorModel::zeros(const FeatureSpec& spec,
                                     std::vector<CompressionLabel> classes) {
  if (classes.empty()) throw RangeError("model needs at least one class");
  PredictorModel m{spec, spec.hash(), std::move(classes), {}, {}, {}};
  m.weights.assign(m.num_classes() * m.dimension(), 0.0);
  return m;
}

int PredictorModel::class_index(const CompressionLabel& label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::string PredictorModel::to_json() const {
  json cls = json::array();
  for (const auto& c : classes) cls.push_back(label_json(c));
  return json{{"feature_spec_hash", feature_spec_hash},
              {"max_n", spec.max_n()},
              {"feature_names", spec.names()},
              {"class_list", std::move(cls)},
              {"weights", weights},
              {"train_config", json::parse(train_config.to_json())},
              {"metrics", metrics}}
      .dump(2);
}

PredictorModel PredictorModel::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    FeatureSpec spec(j.at("max_n").get<int>());
    std::vector<CompressionLabel> classes;
    for (const auto& c : j.at("class_list")) classes.push_back(label_from_json(c));
    PredictorModel m = zeros(spec, std::move(classes));
    m.feature_spec_hash = j.at("feature_spec_hash").get<std::string>();
    m.weights = j.at("weights").get<std::vector<double>>();
    if (m.weights.size() != m.num_classes() * m.dimension()) {
      throw DataError("model weights have wrong size");
    }
    check_finite_weights(m.weights);
    if (j.contains("train_config")) {
      m.train_config = TrainConfig::from_json(j.at("train_config").dump());
    }
    if (j.contains("metrics")) {
      m.metrics = j.at("metrics").get<std::map<std::string, double>>();
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  }
}

void PredictorModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

PredictorModel PredictorModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> logits(const PredictorModel& model, std::span<const double> x) {
  const std::size_t dim = model.dimension();
  if (x.size() != dim) throw IncompatibleModelError("feature dimension mismatch");
  std::vector<double> z(model.num_classes(), 0.0);
  for (std::size_t c = 0; c < z.size(); ++c) {
    const double* row = model.weights.data() + c * dim;
    z[c] = std::inner_product(x.begin(), x.end(), row, 0.0);
  }
  return z;
}

std::vector<double> softmax_predict(const PredictorModel& model,
                                    const FeatureVector& x) {
  if (x.spec_hash != model.feature_spec_hash) {
    throw IncompatibleModelError("feature spec hash " + x.spec_hash +
                                 " does not match model " + model.feature_spec_hash);
  }
  return softmax(logits(model, x.values));
}

CompressionLabel argmax_label(std::span<const CompressionLabel> classes,
                              std::span<const double> probs) {
  if (classes.empty() || classes.size() != probs.size()) {
    throw RangeError("argmax over mismatched class list");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return classes[best];
}

CompressionLabel predict_k(const PredictorModel& model, const QAExample& example,
                           const RetrievalSet& retrieval) {
  const auto probs = softmax_predict(model, extract_features(model.spec, example, retrieval));
  return argmax_label(model.classes, probs);
}

double batch_loss(std::span<const double> weights, std::size_t num_classes,
                  std::span<const TrainingExample> batch, double l2,
                  std::vector<double>* grad) {
  if (num_classes == 0) throw RangeError("batch_loss needs classes");
  const std::size_t dim = weights.size() / num_classes;
  if (grad) grad->assign(weights.size(), 0.0);
  double loss = 0.0;
  std::vector<double> z(num_classes);
  for (const auto& ex : batch) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      z[c] = std::inner_product(ex.x.begin(), ex.x.end(),
                                weights.begin() + c * dim, 0.0);
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_sum = mx + std::log(sum);
    loss += log_sum - z[ex.y];
    if (grad) {
      for (std::size_t c = 0; c < num_classes; ++c) {
        const double coeff =
            std::exp(z[c] - log_sum) - (static_cast<int>(c) == ex.y ? 1.0 : 0.0);
        double* g = grad->data() + c * dim;
        for (std::size_t f = 0; f < dim; ++f) g[f] += coeff * ex.x[f];
      }
    }
  }
  const double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  loss *= inv;
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  loss += l2 * sq;
  if (grad) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      (*grad)[i] = (*grad)[i] * inv + 2.0 * l2 * weights[i];
    }
  }
  return loss;
}

std::vector<TrainingExample> build_training_set(
    std::span<const AnnotatedTriplet> triplets, const JoinedDataset& dataset,
    const FeatureSpec& spec, UnanswerablePolicy policy, std::size_t* dropped) {
  const auto classes = class_list(spec.max_n(), policy);
  std::vector<TrainingExample> out;
  std::size_t n_dropped = 0;
  for (const auto& t : triplets) {
    const JoinedExample* item = dataset.find(t.example_id);
    if (!item) throw DataError("triplet references unknown example " + t.example_id);
    const auto mapped = map_label(t.label, spec.max_n(), policy);
    if (!mapped) {
      ++n_dropped;
      continue;
    }
    if (!mapped->is_unanswerable() && mapped->value() > spec.max_n()) {
      throw DataError("label exceeds N for example " + t.example_id);
    }
    const auto it = std::find(classes.begin(), classes.end(), *mapped);
    TrainingExample ex;
    ex.x = extract_features(spec, item->example, item->retrieval).values;
    ex.y = static_cast<int>(it - classes.begin());
    out.push_back(std::move(ex));
  }
  if (dropped) *dropped = n_dropped;
  return out;
}

TrainResult train_examples(std::span<const TrainingExample> data,
                           const FeatureSpec& spec, const TrainConfig& config) {
  config.validate();
  const auto classes = class_list(spec.max_n(), config.unanswerable_policy);
  std::set<int> distinct;
  for (const auto& ex : data) {
    if (ex.x.size() != spec.dimension()) throw DataError("training vector has wrong dimension");
    if (ex.y < 0 || ex.y >= static_cast<int>(classes.size())) {
      throw DataError("training label outside class list");
    }
    distinct.insert(ex.y);
  }
  if (distinct.size() < 2) {
    throw TrainingError("training data needs at least 2 distinct labels, found " +
                        std::to_string(distinct.size()));
  }

  TrainResult result{PredictorModel::zeros(spec, classes), {}};
  PredictorModel& model = result.model;
  model.train_config = config;
  TrainReport& report = result.report;
  report.examples = data.size();
  report.initial_loss = batch_loss(model.weights, classes.size(), data, 0.0, nullptr);

  const std::size_t n = data.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + bs - 1) / bs;
  const auto total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
  const auto warmup_steps =
      static_cast<std::size_t>(std::floor(config.warmup_fraction * total_steps));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  std::vector<TrainingExample> batch;
  std::vector<double> grad;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += bs, ++step) {
      batch.clear();
      for (std::size_t j = start; j < std::min(n, start + bs); ++j) {
        batch.push_back(data[order[j]]);
      }
      const double loss =
          batch_loss(model.weights, classes.size(), batch, config.l2_penalty, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(step) + " (learning_rate=" +
                            std::to_string(config.learning_rate) + ")");
      }
      double lr = config.learning_rate;
      if (step < warmup_steps) {
        lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
      }
      for (std::size_t w = 0; w < grad.size(); ++w) model.weights[w] -= lr * grad[w];
    }
    report.epoch_loss.push_back(
        batch_loss(model.weights, classes.size(), data, 0.0, nullptr));
  }
  check_finite_weights(model.weights);

  std::size_t correct = 0;
  for (const auto& ex : data) {
    const auto z = logits(model, ex.x);
    if (argmax_label(classes, softmax(z)) == classes[ex.y]) ++correct;
  }
  report.train_accuracy = n ? static_cast<double>(correct) / n : 0.0;
  model.metrics["train_accuracy"] = report.train_accuracy;
  model.metrics["final_loss"] =
      report.epoch_loss.empty() ? report.initial_loss : report.epoch_loss.back();
  return result;
}

TrainResult train(std::span<const AnnotatedTriplet> triplets,
                  const JoinedDataset& dataset, const TrainConfig& config,
                  const FeatureSpec& spec) {
  std::size_t dropped = 0;
  const auto data = build_training_set(triplets, dataset, spec,
                                       config.unanswerable_policy, &dropped);
  TrainResult result = train_examples(data, spec, config);
  result.report.dropped_unanswerable = dropped;
  return result;
}

PredictorReport report_from_pairs(
    std::vector<CompressionLabel> classes, int max_n,
    std::span<const std::pair<CompressionLabel, CompressionLabel>> pairs) {
  PredictorReport r;
  r.classes = std::move(classes);
  r.max_n = max_n;
  const std::size_t c = r.classes.size();
  r.confusion.assign(c, std::vector<std::size_t>(c, 0));
  auto index_of = [&](const CompressionLabel& l) -> int {
    for (std::size_t i = 0; i < c; ++i) {
      if (r.classes[i] == l) return static_cast<int>(i);
    }
    return -1;
  };
  std::array<std::size_t, 3> within{};
  std::size_t correct = 0;
  for (const auto& [truth, pred] : pairs) {
    const int ti = index_of(truth);
    const int pi = index_of(pred);
    if (ti < 0 || pi < 0) {
      ++r.skipped;
      continue;
    }
    ++r.confusion[ti][pi];
    ++r.total;
    if (ti == pi) ++correct;
    const int diff = std::abs(truth.ordinal(max_n) - pred.ordinal(max_n));
    for (int m = 0; m < 3; ++m) {
      if (diff <= m) ++within[m];
    }
  }
  r.precision.assign(c, 0.0);
  r.recall.assign(c, 0.0);
  r.support.assign(c, 0);
  for (std::size_t i = 0; i < c; ++i) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < c; ++t) {
      predicted += r.confusion[t][i];
      r.support[i] += r.confusion[i][t];
    }
    if (predicted) r.precision[i] = static_cast<double>(r.confusion[i][i]) / predicted;
    if (r.support[i]) r.recall[i] = static_cast<double>(r.confusion[i][i]) / r.support[i];
  }
  if (r.total) {
    r.accuracy = static_cast<double>(correct) / r.total;
    for (int m = 0; m < 3; ++m) {
      r.within_margin[m] = static_cast<double>(within[m]) / r.total;
    }
  }
  return r;
}

PredictorReport evaluate_predictor(const PredictorModel& model,
                                   std::span<const AnnotatedTriplet> held_out,
                                   const JoinedDataset& dataset) {
  if (held_out.empty()) throw RangeError("held-out set is empty");
  const int max_n = model.spec.max_n();
  std::vector<std::pair<CompressionLabel, CompressionLabel>> pairs;
  std::size_t dropped = 0;
  for (const auto& t : held_out) {
    const JoinedExample* item = dataset.find(t.example_id);
    if (!item) throw DataError("triplet references unknown example " + t.example_id);
    const auto truth = map_label(t.label, max_n, model.train_config.unanswerable_policy);
    if (!truth) {
      ++dropped;
      continue;
    }
    pairs.emplace_back(*truth, predict_k(model, item->example, item->retrieval));
  }
  PredictorReport report = report_from_pairs(model.classes, max_n, pairs);
  report.skipped += dropped;
  return report;
}

std::string PredictorReport::to_json() const {
  json cls = json::array();
  for (const auto& c : classes) cls.push_back(label_json(c));
  return json{{"classes", std::move(cls)},
              {"max_n", max_n},
              {"confusion", confusion},
              {"total", total},
              {"skipped", skipped},
              {"accuracy", accuracy},
              {"precision", precision},
              {"recall", recall},
              {"support", support},
              {"within_margin",
               {{"0", within_margin[0]}, {"1", within_margin[1]}, {"2", within_margin[2]}}}}
      .dump(2);
}

PredictorReport PredictorReport::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    PredictorReport r;
    for (const auto& c : j.at("classes")) r.classes.push_back(label_from_json(c));
    r.max_n = j.at("max_n").get<int>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.total = j.at("total").get<std::size_t>();
    r.skipped = j.value("skipped", std::size_t{0});
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<std::vector<double>>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.support = j.at("support").get<std::vector<std::size_t>>();
    const auto& wm = j.at("within_margin");
    for (int m = 0; m < 3; ++m) r.within_margin[m] = wm.at(std::to_string(m)).get<double>();
    if (r.confusion.size() != r.classes.size()) {
      throw DataError("confusion matrix does not match class list");
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid predictor report: ") + e.what());
  }
}

CompressionLabel LinearPredictor::predict(const QAExample& example,
                                          const RetrievalSet& retrieval) const {
  return predict_k(model_, example, retrieval);
}

FixedKPredictor::FixedKPredictor(int k, int max_n) : k_(k) {
  if (k < 0 || k > max_n) {
    throw RangeError("fixed k=" + std::to_string(k) + " outside 0.." + std::to_string(max_n));
  }
}

RandomKPredictor::RandomKPredictor(std::uint64_t seed, int lo, int hi, int max_n)
    : seed_(seed), lo_(lo), hi_(hi) {
  if (lo < 1 || hi < lo || hi > max_n) {
    throw RangeError("random k range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "] not within 1.." + std::to_string(max_n));
  }
}

int RandomKPredictor::draw(std::string_view key) const {
  const double u = keyed_uniform(seed_, key);
  const int span = hi_ - lo_ + 1;
  return lo_ + std::min(span - 1, static_cast<int>(u * span));
}

}  // namespace adacomp
