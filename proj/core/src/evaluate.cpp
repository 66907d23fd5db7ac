#include "fallcloud/evaluate.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fallcloud/error.hpp"
#include "fallcloud/parallel.hpp"

namespace fallcloud::eval {

std::string PipelineConfig::snapshot() const {
  const auto& m = model;
  return fmt::format(
      "rounds={} alpha={} beta={} eta={} max_depth={} min_child_hessian={} positive_weight={} cutoff={} "
      "safety={} gate={} pca={} pca_fraction={} folds={}",
      m.rounds, m.alpha, m.beta, m.learning_rate, m.max_depth, m.min_child_hessian,
      m.positive_weight ? fmt::format("{}", *m.positive_weight) : std::string("auto"), m.cutoff, safety_factor,
      use_gate, use_pca, pca_fraction, scheme == FoldScheme::Stratified ? "stratified" : "subject");
}

LabeledFeatures featurize(std::span<const Window> windows, const features::FeatureRegistry& registry,
                          std::size_t threads) {
  LabeledFeatures out;
  out.fingerprint = registry.fingerprint();
  out.registry = registry.canonical();
  const auto vectors = features::extract_batch(windows, registry, threads);
  out.x.cols = registry.arity();
  out.x.values.reserve(windows.size() * registry.arity());
  std::set<std::string> datasets;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.x.push_row(vectors[i].values);
    out.labels.push_back(windows[i].label);
    out.peaks.push_back(peak_rms(windows[i].samples));
    out.groups.push_back(windows[i].dataset + "/" + windows[i].subject);
    datasets.insert(windows[i].dataset);
  }
  for (const auto& d : datasets) out.dataset += (out.dataset.empty() ? "" : "+") + d;
  return out;
}

fedt::Verdict TrainedPipeline::predict(std::span<const double> x, std::optional<double> peak) const {
  if (threshold && peak && *peak < threshold->tau) return {Label::Adl, 0.0};
  if (pca) {
    const auto z = pca_apply(*pca, x);
    return fedt::classify_margin(fedt::predict_margin(model, z), model.cutoff);
  }
  return fedt::classify_margin(fedt::predict_margin(model, x), model.cutoff);
}

TrainedPipeline fit_pipeline(const LabeledFeatures& data, std::span<const std::size_t> rows,
                             const PipelineConfig& cfg) {
  TrainedPipeline p;
  if (cfg.use_gate && !data.peaks.empty()) {
    std::vector<double> fall_peaks;
    for (auto r : rows) {
      if (data.labels[r] == Label::Fall) fall_peaks.push_back(data.peaks[r]);
    }
    p.threshold = fit_threshold_from_peaks(fall_peaks, cfg.safety_factor);
  }

  fedt::TrainingSet set;
  if (cfg.use_pca) {
    FeatureMatrix sub;
    sub.cols = data.x.cols;
    for (auto r : rows) sub.push_row(data.x.row(r));
    p.pca = pca_fit(sub, cfg.pca_fraction);
    for (auto r : rows) set.add(pca_apply(*p.pca, data.x.row(r)), data.labels[r]);
    set.fingerprint = features::fnv1a64(fmt::format("pca:{}:{}", data.fingerprint, p.pca->output_dim));
  } else {
    for (auto r : rows) set.add(data.x.row(r), data.labels[r]);
    set.fingerprint = data.fingerprint;
    set.registry = data.registry;
  }
  p.model = fedt::train(set, cfg.model);
  return p;
}

std::vector<std::vector<std::size_t>> make_folds(const LabeledFeatures& data, std::size_t k,
                                                 std::uint64_t seed, FoldScheme scheme) {
  if (k < 2) throw Error(Errc::Parameter, "k-fold evaluation needs k >= 2");
  std::vector<std::size_t> falls, adls;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] == Label::Fall ? falls : adls).push_back(i);
  if (falls.empty() || adls.empty()) throw Error(Errc::CannotEvaluate, "both classes must be present");

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  if (scheme == FoldScheme::Stratified) {
    if (falls.size() < k || adls.size() < k) {
      throw Error(Errc::CannotEvaluate, fmt::format("each class needs at least k={} windows", k));
    }
    std::shuffle(falls.begin(), falls.end(), rng);
    std::shuffle(adls.begin(), adls.end(), rng);
    std::size_t next = 0;
    for (const auto* cls : {&falls, &adls}) {
      for (auto i : *cls) {
        folds[next].push_back(i);
        next = (next + 1) % k;
      }
    }
  } else {
    if (data.groups.size() != data.size()) throw Error(Errc::CannotEvaluate, "subject folds need group ids");
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < data.size(); ++i) by_group[data.groups[i]].push_back(i);
    if (by_group.size() < k) {
      throw Error(Errc::CannotEvaluate, fmt::format("{} subjects cannot fill {} folds", by_group.size(), k));
    }
    std::vector<const std::vector<std::size_t>*> groups;
    for (const auto& [name, rows] : by_group) groups.push_back(&rows);
    std::shuffle(groups.begin(), groups.end(), rng);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto& fold = folds[g % k];
      fold.insert(fold.end(), groups[g]->begin(), groups[g]->end());
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

ConfusionCounts score(const TrainedPipeline& p, const LabeledFeatures& data, std::span<const std::size_t> rows) {
  ConfusionCounts c;
  for (auto r : rows) {
    std::optional<double> peak;
    if (!data.peaks.empty()) peak = data.peaks[r];
    c.record(data.labels[r], p.predict(data.x.row(r), peak).label);
  }
  return c;
}

void finish(MetricsReport& report) {
  report.counts = {};
  for (const auto& f : report.per_fold) report.counts += f.counts;
  report.metrics = metrics(report.counts);
}

}  // namespace

MetricsReport kfold_evaluate(const LabeledFeatures& data, std::size_t k, const PipelineConfig& cfg,
                             std::uint64_t seed) {
  const auto folds = make_folds(data, k, seed, cfg.scheme);
  MetricsReport report;
  report.dataset = data.dataset;
  report.config = cfg.snapshot();
  report.seed = seed;
  report.k = k;
  report.per_fold.resize(k);

  PipelineConfig inner = cfg;
  if (resolve_threads(cfg.threads) > 1) inner.model.threads = 1;
  parallel_for(k, cfg.threads, [&](std::size_t f) {
    std::vector<char> in_test(data.size(), 0);
    for (auto r : folds[f]) in_test[r] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < data.size(); ++r) {
      if (!in_test[r]) train_rows.push_back(r);
    }
    const auto pipeline = fit_pipeline(data, train_rows, inner);
    FoldResult& out = report.per_fold[f];
    out.fold = f;
    out.counts = score(pipeline, data, folds[f]);
    out.train_size = train_rows.size();
    out.test_size = folds[f].size();
    out.tau = pipeline.threshold ? pipeline.threshold->tau : 0.0;
    out.pca_dims = pipeline.pca ? pipeline.pca->output_dim : 0;
  });
  finish(report);
  return report;
}

MetricsReport kfold_evaluate(std::span<const Window> windows, std::size_t k, const PipelineConfig& cfg,
                             std::uint64_t seed, const features::FeatureRegistry& registry) {
  auto report = kfold_evaluate(featurize(windows, registry), k, cfg, seed);
  report.train_provenance = provenance(windows);
  return report;
}

AblationReport pca_ablation(const LabeledFeatures& data, std::size_t k, const PipelineConfig& cfg,
                            std::uint64_t seed) {
  PipelineConfig plain = cfg;
  plain.use_pca = false;
  PipelineConfig reduced = cfg;
  reduced.use_pca = true;
  return {kfold_evaluate(data, k, plain, seed), kfold_evaluate(data, k, reduced, seed)};
}

AblationReport pca_ablation(std::span<const Window> windows, std::size_t k, const PipelineConfig& cfg,
                            std::uint64_t seed, const features::FeatureRegistry& registry) {
  auto report = pca_ablation(featurize(windows, registry), k, cfg, seed);
  report.without_pca.train_provenance = report.with_pca.train_provenance = provenance(windows);
  return report;
}

MetricsReport cross_device_eval(const LabeledFeatures& train, const LabeledFeatures& test,
                                const PipelineConfig& cfg) {
  if (train.fingerprint != test.fingerprint) {
    throw Error(Errc::Incompatible, "train and test features come from different registries");
  }
  std::vector<std::size_t> rows(train.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto pipeline = fit_pipeline(train, rows, cfg);

  std::vector<std::size_t> test_rows(test.size());
  for (std::size_t i = 0; i < test_rows.size(); ++i) test_rows[i] = i;
  MetricsReport report;
  report.dataset = test.dataset;
  report.config = cfg.snapshot();
  report.k = 1;
  FoldResult fold;
  fold.counts = score(pipeline, test, test_rows);
  fold.train_size = train.size();
  fold.test_size = test.size();
  fold.tau = pipeline.threshold ? pipeline.threshold->tau : 0.0;
  fold.pca_dims = pipeline.pca ? pipeline.pca->output_dim : 0;
  report.per_fold.push_back(fold);
  finish(report);
  return report;
}

MetricsReport cross_device_eval(std::span<const Window> train, std::span<const Window> test,
                                const PipelineConfig& cfg, const features::FeatureRegistry& registry) {
  auto report = cross_device_eval(featurize(train, registry), featurize(test, registry), cfg);
  report.train_provenance = provenance(train);
  report.test_provenance = provenance(test);
  return report;
}

std::string provenance(std::span<const Window> windows) {
  std::set<std::string> datasets, subjects;
  std::size_t falls = 0;
  for (const auto& w : windows) {
    datasets.insert(w.dataset);
    subjects.insert(w.dataset + "/" + w.subject);
    if (w.label == Label::Fall) ++falls;
  }
  std::string names;
  for (const auto& d : datasets) names += (names.empty() ? "" : "+") + d;
  return fmt::format("datasets={} subjects={} windows={} falls={} adls={}", names, subjects.size(),
                     windows.size(), falls, windows.size() - falls);
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["sensitivity"] = r.metrics.sensitivity;
  j["specificity"] = r.metrics.specificity;
  j["precision"] = r.metrics.precision;
  j["f1"] = r.metrics.f1;
  j["degenerate"] = r.metrics.degenerate();
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["tn"] = r.counts.tn;
  j["fn"] = r.counts.fn;
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["config"] = r.config;
  if (!r.train_provenance.empty()) j["train_provenance"] = r.train_provenance;
  if (!r.test_provenance.empty()) j["test_provenance"] = r.test_provenance;
  auto folds = nlohmann::json::array();
  for (const auto& f : r.per_fold) {
    const auto m = metrics(f.counts);
    folds.push_back({{"fold", f.fold},
                     {"tp", f.counts.tp},
                     {"fp", f.counts.fp},
                     {"tn", f.counts.tn},
                     {"fn", f.counts.fn},
                     {"sensitivity", m.sensitivity},
                     {"specificity", m.specificity},
                     {"precision", m.precision},
                     {"f1", m.f1},
                     {"train_size", f.train_size},
                     {"test_size", f.test_size},
                     {"tau", f.tau},
                     {"pca_dims", f.pca_dims}});
  }
  j["per_fold"] = std::move(folds);
  return j;
}

std::string to_table(const MetricsReport& r) {
  std::ostringstream out;
  out << fmt::format("dataset: {}   k={} seed={}\n", r.dataset, r.k, r.seed);
  out << fmt::format("config:  {}\n", r.config);
  if (!r.train_provenance.empty()) out << fmt::format("train:   {}\n", r.train_provenance);
  if (!r.test_provenance.empty()) out << fmt::format("test:    {}\n", r.test_provenance);
  out << fmt::format("{:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "fold", "tp", "fp", "tn", "fn",
                     "sens", "spec", "prec", "f1");
  for (const auto& f : r.per_fold) {
    const auto m = metrics(f.counts);
    out << fmt::format("{:>6} {:>8} {:>8} {:>8} {:>8} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", f.fold, f.counts.tp,
                       f.counts.fp, f.counts.tn, f.counts.fn, m.sensitivity, m.specificity, m.precision, m.f1);
  }
  const auto& m = r.metrics;
  out << fmt::format("{:>6} {:>8} {:>8} {:>8} {:>8} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}{}\n", "pooled", r.counts.tp,
                     r.counts.fp, r.counts.tn, r.counts.fn, m.sensitivity, m.specificity, m.precision, m.f1,
                     m.degenerate() ? "  (degenerate ratio reported as 0)" : "");
  return out.str();
}

std::optional<ReferenceResult> reference_result(std::string_view dataset) {
  static const ReferenceResult table[] = {
      {"sisfall", 0.9811, 0.9998, 0.9966, 0.9887},
      {"mmsys", 0.9733, 0.9997, 0.9738, 0.9727},
      {"mobiact", 0.9805, 0.9995, 0.9974, 0.9887},
      {"practical", 0.9525, 0.9998, 0.9846, 0.9678},
  };
  for (const auto& r : table) {
    if (r.dataset == dataset) return r;
  }
  return std::nullopt;
}

std::optional<ReferenceResult> reference_pca_result(std::string_view dataset) {
  static const ReferenceResult table[] = {
      {"sisfall", 0.7330, 0.9984, 0.9415, 0.8231},
      {"mmsys", 0.6561, 0.9995, 0.9277, 0.7649},
  };
  for (const auto& r : table) {
    if (r.dataset == dataset) return r;
  }
  return std::nullopt;
}

std::optional<ReferenceCounts> reference_counts(std::string_view dataset) {
  static const ReferenceCounts table[] = {
      {"sisfall", 1798, 52066},
      {"mmsys", 416, 43866},
      {"mobiact", 767, 50857},
      {"practical", 252, 27452},
  };
  for (const auto& r : table) {
    if (r.dataset == dataset) return r;
  }
  return std::nullopt;
}

}  // namespace fallcloud::eval
