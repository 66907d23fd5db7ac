#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fallcloud/features.hpp"
#include "fallcloud/fedt.hpp"
#include "fallcloud/metrics.hpp"
#include "fallcloud/pca.hpp"
#include "fallcloud/signal.hpp"
#include "fallcloud/threshold.hpp"

namespace fallcloud::eval {

enum class FoldScheme { Stratified, Subject };

struct PipelineConfig {
  fedt::Hyperparameters model;
  double safety_factor = 0.9;
  /// Windows whose peak RMS stays below the fitted tau are predicted ADL
  /// without consulting the model, as on the device.
  bool use_gate = true;
  bool use_pca = false;
  double pca_fraction = 0.95;
  FoldScheme scheme = FoldScheme::Stratified;
  /// Parallel folds; 0 = hardware concurrency.
  std::size_t threads = 0;

  /// Stable one-line description recorded in reports.
  std::string snapshot() const;
};

/// Feature rows plus what the pipeline needs besides features.
struct LabeledFeatures {
  FeatureMatrix x;
  std::vector<Label> labels;
  /// Peak RMS per row; empty disables the gate regardless of config.
  std::vector<double> peaks;
  /// Subject id per row, for subject-level folds.
  std::vector<std::string> groups;
  std::uint64_t fingerprint = 0;
  std::string registry;
  std::string dataset;

  std::size_t size() const noexcept { return labels.size(); }
};

LabeledFeatures featurize(std::span<const Window> windows, const features::FeatureRegistry& registry,
                          std::size_t threads = 0);

/// Everything fitted on training rows only.
struct TrainedPipeline {
  std::optional<Threshold> threshold;
  std::optional<PcaProjection> pca;
  fedt::FedtModel model;

  fedt::Verdict predict(std::span<const double> x, std::optional<double> peak) const;
};

TrainedPipeline fit_pipeline(const LabeledFeatures& data, std::span<const std::size_t> rows,
                             const PipelineConfig& cfg);

/// Test-fold row indices. Stratified: classes shuffled with `seed` and dealt
/// round-robin so fold sizes differ by at most one. Subject: whole subjects
/// per fold. Throws Errc::CannotEvaluate when a class is absent or has fewer
/// than k members.
std::vector<std::vector<std::size_t>> make_folds(const LabeledFeatures& data, std::size_t k,
                                                 std::uint64_t seed, FoldScheme scheme);

struct FoldResult {
  std::size_t fold = 0;
  ConfusionCounts counts;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double tau = 0.0;
  std::size_t pca_dims = 0;
};

struct MetricsReport {
  std::string dataset;
  Metrics metrics;
  ConfusionCounts counts;
  std::vector<FoldResult> per_fold;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::string train_provenance;
  std::string test_provenance;
};

/// Stratified (or subject) k-fold CV with pooled confusion counts.
MetricsReport kfold_evaluate(const LabeledFeatures& data, std::size_t k, const PipelineConfig& cfg,
                             std::uint64_t seed);
MetricsReport kfold_evaluate(std::span<const Window> windows, std::size_t k, const PipelineConfig& cfg,
                             std::uint64_t seed,
                             const features::FeatureRegistry& registry = features::FeatureRegistry::default_registry());

struct AblationReport {
  MetricsReport without_pca;
  MetricsReport with_pca;
};

/// Same folds and pipeline twice, the second with PCA fitted per training fold.
AblationReport pca_ablation(const LabeledFeatures& data, std::size_t k, const PipelineConfig& cfg,
                            std::uint64_t seed);
AblationReport pca_ablation(std::span<const Window> windows, std::size_t k, const PipelineConfig& cfg,
                            std::uint64_t seed,
                            const features::FeatureRegistry& registry = features::FeatureRegistry::default_registry());

/// Fits on `train` only and scores `test`.
MetricsReport cross_device_eval(const LabeledFeatures& train, const LabeledFeatures& test,
                                const PipelineConfig& cfg);
MetricsReport cross_device_eval(std::span<const Window> train, std::span<const Window> test,
                                const PipelineConfig& cfg,
                                const features::FeatureRegistry& registry = features::FeatureRegistry::default_registry());

/// Summary of which datasets, devices and classes a window set holds.
std::string provenance(std::span<const Window> windows);

/// Stable keys: sensitivity, specificity, precision, f1, tp, fp, tn, fn, per_fold.
nlohmann::json to_json(const MetricsReport& report);
std::string to_table(const MetricsReport& report);

/// Published FEDT results used as comparison targets for real datasets.
struct ReferenceResult {
  std::string dataset;
  double sensitivity;
  double specificity;
  double precision;
  double f1;
};

std::optional<ReferenceResult> reference_result(std::string_view dataset);
std::optional<ReferenceResult> reference_pca_result(std::string_view dataset);

struct ReferenceCounts {
  std::string dataset;
  std::size_t falls;
  std::size_t adls;
};

std::optional<ReferenceCounts> reference_counts(std::string_view dataset);

}  // namespace fallcloud::eval
