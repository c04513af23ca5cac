#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adacomp/dataset.hpp"
#include "adacomp/features.hpp"
#include "adacomp/types.hpp"

namespace adacomp {

// How Unanswerable triplets enter training: dropped, relabeled K(N), or
// kept as an extra class ordered after K(N).
enum class UnanswerablePolicy { drop, map_to_n, keep };

UnanswerablePolicy parse_unanswerable_policy(const std::string& name);
const char* to_string(UnanswerablePolicy policy);

struct TrainConfig {
  double learning_rate = 0.05;
  int batch_size = 8;
  int epochs = 100;
  double warmup_fraction = 0.1;  // linear ramp of the step size
  std::uint64_t seed = 0;
  double l2_penalty = 1e-4;
  UnanswerablePolicy unanswerable_policy = UnanswerablePolicy::drop;

  void validate() const;
  static TrainConfig from_json(const std::string& text);
  std::string to_json() const;
};

// Classes K(0)..K(max_n), plus Unanswerable under the keep policy.
std::vector<CompressionLabel> class_list(int max_n, UnanswerablePolicy policy);

// Linear softmax classifier over FeatureSpec vectors. weights is
// row-major, one row per class.
struct PredictorModel {
  FeatureSpec spec;
  std::string feature_spec_hash;
  std::vector<CompressionLabel> classes;
  std::vector<double> weights;
  TrainConfig train_config;
  std::map<std::string, double> metrics;

  static PredictorModel zeros(const FeatureSpec& spec,
                              std::vector<CompressionLabel> classes);

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::size_t dimension() const noexcept { return spec.dimension(); }
  // Index of a label in classes, or -1.
  int class_index(const CompressionLabel& label) const;

  std::string to_json() const;
  static PredictorModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static PredictorModel load(const std::filesystem::path& path);
};

// Max-logit-stabilized softmax.
std::vector<double> softmax(std::span<const double> logits);

std::vector<double> logits(const PredictorModel& model, std::span<const double> x);

// Throws IncompatibleModelError when the vector's spec hash differs from
// the model's.
std::vector<double> softmax_predict(const PredictorModel& model,
                                    const FeatureVector& x);

// Argmax over classes; exact ties go to the class listed first, i.e. the
// smallest k.
CompressionLabel argmax_label(std::span<const CompressionLabel> classes,
                              std::span<const double> probs);

CompressionLabel predict_k(const PredictorModel& model, const QAExample& example,
                           const RetrievalSet& retrieval);

struct TrainingExample {
  std::vector<double> x;
  int y = 0;  // class index
};

// Mean cross-entropy over the batch plus l2 * ||W||^2. When grad is
// non-null it receives dL/dW (same layout as weights).
double batch_loss(std::span<const double> weights, std::size_t num_classes,
                  std::span<const TrainingExample> batch, double l2,
                  std::vector<double>* grad);

struct TrainReport {
  double initial_loss = 0.0;            // mean data loss before any update
  std::vector<double> epoch_loss;       // mean data loss after each epoch
  double train_accuracy = 0.0;
  std::size_t examples = 0;
  std::size_t dropped_unanswerable = 0;
};

struct TrainResult {
  PredictorModel model;
  TrainReport report;
};

// Features + class indices for triplets under a policy. Unanswerable rows
// are dropped (counted in *dropped) or relabeled per the policy.
std::vector<TrainingExample> build_training_set(
    std::span<const AnnotatedTriplet> triplets, const JoinedDataset& dataset,
    const FeatureSpec& spec, UnanswerablePolicy policy,
    std::size_t* dropped = nullptr);

// Minibatch SGD from zero weights with a seeded per-epoch shuffle.
// Requires at least two distinct labels; aborts with TrainingError on a
// non-finite loss.
TrainResult train_examples(std::span<const TrainingExample> data,
                           const FeatureSpec& spec, const TrainConfig& config);

TrainResult train(std::span<const AnnotatedTriplet> triplets,
                  const JoinedDataset& dataset, const TrainConfig& config,
                  const FeatureSpec& spec = FeatureSpec{});

struct PredictorReport {
  std::vector<CompressionLabel> classes;
  int max_n = 5;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  std::size_t total = 0;
  std::size_t skipped = 0;  // true labels outside the class list
  double accuracy = 0.0;
  std::vector<double> precision;  // 0 for classes never predicted
  std::vector<double> recall;     // 0 for classes never seen
  std::vector<std::size_t> support;
  std::array<double, 3> within_margin{};  // P(|pred - true| <= m), m = 0,1,2

  std::string to_json() const;
  static PredictorReport from_json(const std::string& text);
};

// Tallies (true, pred) pairs. Unanswerable counts as max_n + 1 for margins.
PredictorReport report_from_pairs(
    std::vector<CompressionLabel> classes, int max_n,
    std::span<const std::pair<CompressionLabel, CompressionLabel>> pairs);

// Evaluates held-out triplets; true labels are mapped with the model's
// unanswerable policy. Throws RangeError on an empty held-out set.
PredictorReport evaluate_predictor(const PredictorModel& model,
                                   std::span<const AnnotatedTriplet> held_out,
                                   const JoinedDataset& dataset);

// Compression-rate predictors usable by the harness.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual CompressionLabel predict(const QAExample& example,
                                   const RetrievalSet& retrieval) const = 0;
  virtual std::string name() const = 0;
};

class LinearPredictor final : public Predictor {
 public:
  explicit LinearPredictor(PredictorModel model) : model_(std::move(model)) {}
  CompressionLabel predict(const QAExample& example,
                           const RetrievalSet& retrieval) const override;
  std::string name() const override { return "linear"; }
  const PredictorModel& model() const noexcept { return model_; }

 private:
  PredictorModel model_;
};

// Top-k baseline: always K(k), 0 <= k <= max_n.
class FixedKPredictor final : public Predictor {
 public:
  FixedKPredictor(int k, int max_n);
  CompressionLabel predict(const QAExample&, const RetrievalSet&) const override {
    return CompressionLabel::k(k_);
  }
  std::string name() const override { return "top-" + std::to_string(k_); }

 private:
  int k_;
};

// Top-Random baseline: k uniform over [lo, hi] with 1 <= lo <= hi <= max_n.
// Each draw is keyed by (seed, example id), so results do not depend on
// evaluation order.
class RandomKPredictor final : public Predictor {
 public:
  RandomKPredictor(std::uint64_t seed, int lo, int hi, int max_n);
  CompressionLabel predict(const QAExample& example,
                           const RetrievalSet&) const override {
    return CompressionLabel::k(draw(example.id));
  }
  int draw(std::string_view key) const;
  std::string name() const override { return "top-random"; }

 private:
  std::uint64_t seed_;
  int lo_;
  int hi_;
};

}  // namespace adacomp
