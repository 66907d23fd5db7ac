#pragma once

#include <random>

#include "fallcloud/evaluate.hpp"
#include "fallcloud/synthetic.hpp"
#include "fallcloud/threshold.hpp"

namespace fixtures {

/// Forty columns: 39 noisy copies of one high-variance latent that says
/// nothing about the class, and one low-variance column that separates the
/// classes. No peaks, so the gate stays off.
inline fallcloud::eval::LabeledFeatures low_variance_signal(std::size_t per_class = 200, std::uint64_t seed = 5) {
  using namespace fallcloud;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> loadings(39);
  for (auto& a : loadings) a = 1.0 + 0.5 * n(rng);
  eval::LabeledFeatures out;
  out.fingerprint = 0x10f1;
  out.dataset = "low-variance";
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool fall = i % 2 == 0;
    const double latent = 10.0 * n(rng);
    std::vector<double> row(40);
    for (std::size_t c = 0; c < 39; ++c) row[c] = loadings[c] * latent + 0.05 * n(rng);
    row[39] = (fall ? 0.3 : -0.3) + 0.05 * n(rng);
    out.x.push_row(row);
    out.labels.push_back(fall ? Label::Fall : Label::Adl);
    out.groups.push_back("g" + std::to_string(i % 10));
  }
  return out;
}

inline fallcloud::SyntheticSpec small_synthetic(std::uint64_t seed, std::size_t falls, std::size_t adls) {
  fallcloud::SyntheticSpec spec;
  spec.seed = seed;
  spec.falls = falls;
  spec.adls = adls;
  return spec;
}

/// Model, registry and threshold trained on a small synthetic set.
struct Trained {
  fallcloud::features::FeatureRegistry registry = fallcloud::features::FeatureRegistry::default_registry();
  fallcloud::fedt::FedtModel model;
  fallcloud::Threshold threshold;
};

inline const Trained& trained(std::uint64_t seed = 7) {
  using namespace fallcloud;
  static const Trained t = [seed] {
    Trained out;
    const auto windows = segment_all(generate_synthetic(small_synthetic(seed, 80, 30)), DatasetConfig::synthetic());
    out.threshold = fit_threshold(windows, 0.9);
    const auto data = eval::featurize(windows, out.registry, 0);
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    eval::PipelineConfig cfg;
    cfg.use_gate = false;
    cfg.model.rounds = 40;
    out.model = eval::fit_pipeline(data, rows, cfg).model;
    out.model.model_id = "fixture";
    return out;
  }();
  return t;
}

/// Recordings concatenated end to end.
inline fallcloud::TriaxialRecording concatenate(const std::vector<fallcloud::TriaxialRecording>& parts,
                                                const std::string& id) {
  fallcloud::TriaxialRecording out = parts.front();
  out.id = id;
  out.samples.clear();
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

}  // namespace fixtures
