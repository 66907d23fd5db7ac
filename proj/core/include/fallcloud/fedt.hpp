#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fallcloud/bytes.hpp"
#include "fallcloud/features.hpp"
#include "fallcloud/signal.hpp"

/// Additive ensemble of regression trees trained by second-order boosting on
/// the objective
///
///   Obj = sum_j logloss(margin_j, y_j) + sum_m (alpha * K_m + beta * sum_k (eta * w_mk)^2)
///
/// Trees store unshrunk leaf weights w; the ensemble adds eta * w, and that
/// is what the regularizer sees. The penalty is beta * sum w^2, not
/// beta/2 * sum w^2 as in most boosting libraries, so every closed form
/// below carries 2*beta.
namespace fallcloud::fedt {

struct Node {
  /// -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double weight = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const Node&, const Node&) = default;
};

/// Binary CART with real leaf scores. Node 0 is the root. Routing sends
/// x[feature] < threshold left and everything else right.
class RegressionTree {
 public:
  RegressionTree() : nodes_{Node{}} {}
  explicit RegressionTree(std::vector<Node> nodes);

  static RegressionTree leaf(double weight);
  static RegressionTree stump(std::int32_t feature, double threshold, double left_weight,
                              double right_weight);

  /// Throws Errc::Contract when a split references a feature beyond x.
  double predict(std::span<const double> x) const;

  std::size_t leaf_count() const noexcept;
  std::size_t depth() const noexcept;
  double sum_squared_weights() const noexcept;
  std::int32_t max_feature() const noexcept;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

double predict_tree(const RegressionTree& tree, std::span<const double> x);

struct Hyperparameters {
  std::size_t rounds = 100;
  double alpha = 0.0;
  double beta = 1.0;
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  double min_child_hessian = 1.0;
  /// Multiplier on g and h of FALL examples; unset = N_adl / N_fall.
  std::optional<double> positive_weight;
  /// Initial margin; unset = log-odds of the training FALL prevalence.
  std::optional<double> base_score;
  double cutoff = 0.5;
  /// Split-scan workers; 0 = hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;

  void validate() const;
  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct FedtModel {
  std::vector<RegressionTree> trees;
  /// Resolved at training time: positive_weight and base_score are always set.
  Hyperparameters params;
  double base_score = 0.0;
  double cutoff = 0.5;
  std::uint64_t fingerprint = 0;
  std::size_t feature_count = 0;
  /// Canonical feature registry the model was trained against.
  std::string registry;
  std::string model_id;

  /// Throws Errc::Contract when an invariant is broken.
  void validate() const;
  std::size_t total_leaves() const noexcept;
  double total_squared_weights() const noexcept;

  friend bool operator==(const FedtModel&, const FedtModel&) = default;
};

/// Row-major feature matrix with 0/1 labels.
struct TrainingSet {
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t fingerprint = 0;
  std::string registry;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  void add(std::span<const double> x, Label label);

  static TrainingSet from(std::span<const features::FeatureVector> xs, std::span<const Label> labels,
                          const features::FeatureRegistry* registry = nullptr);
};

/// Base score plus learning-rate-scaled sum of tree outputs; no fingerprint check.
double predict_margin(const FedtModel& model, std::span<const double> x);
/// Throws Errc::Incompatible when the vector came from a different registry.
double predict_margin(const FedtModel& model, const features::FeatureVector& x);

struct Verdict {
  Label label = Label::Adl;
  double probability = 0.0;
};

/// probability = logistic(margin); FALL iff probability >= cutoff.
Verdict classify(const FedtModel& model, const features::FeatureVector& x);
Verdict classify_margin(double margin, double cutoff);

double logistic(double margin) noexcept;
/// -[y log p + (1-y) log(1-p)] evaluated stably from the margin.
double logistic_loss(double margin, std::uint8_t label) noexcept;

/// argmin_w G*w + H*w^2/2 + beta*w^2 = -G / (H + 2 beta).
/// Throws Errc::DegenerateLeaf when H + 2 beta <= 0.
double leaf_weight(double grad_sum, double hess_sum, double beta);

/// Objective reduction of splitting a leaf into (L, R), minus alpha for the
/// extra leaf. Throws Errc::DegenerateSplit on a nonpositive denominator.
double split_gain(double grad_sum, double hess_sum, double grad_left, double hess_left, double alpha,
                  double beta);

/// Training objective at the model's margins. `weights` (optional, one per
/// row) scales each example's loss.
double objective(const FedtModel& model, const TrainingSet& data, double alpha, double beta,
                 std::span<const double> weights = {});

struct RoundStats {
  std::size_t round = 0;
  double objective = 0.0;
  std::size_t leaves = 0;
};

struct TrainingLog {
  std::vector<RoundStats> rounds;
  double positive_weight = 1.0;
};

/// Deterministic for identical input. Throws Errc::CannotTrain for
/// single-class data and Errc::Contract for non-finite features or ragged rows.
FedtModel train(const TrainingSet& data, const Hyperparameters& params, TrainingLog* log = nullptr);

/// Per-example weights used by training: positive_weight for FALL rows, 1 otherwise.
std::vector<double> example_weights(const TrainingSet& data, double positive_weight);

// Versioned binary model file: magic "FEDTMODL", u32 version, u64 body
// length, body, CRC-32 of the body. All fields big-endian.
inline constexpr std::uint32_t kModelFormatVersion = 1;

Bytes save_model(const FedtModel& model);
/// Errors: Errc::Truncated, Errc::BadMagic, Errc::VersionMismatch,
/// Errc::ChecksumMismatch, Errc::Incompatible (fingerprint does not hash the
/// embedded registry), Errc::Corrupt (structurally invalid trees).
FedtModel load_model(std::span<const std::uint8_t> bytes);

}  // namespace fallcloud::fedt
