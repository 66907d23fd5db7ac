#include <benchmark/benchmark.h>

#include "fallcloud/evaluate.hpp"
#include "fallcloud/features.hpp"
#include "fallcloud/fedt.hpp"
#include "fallcloud/synthetic.hpp"
#include "fallcloud/wire.hpp"

using namespace fallcloud;

namespace {

const std::vector<Window>& windows() {
  static const auto w = [] {
    SyntheticSpec spec;
    spec.falls = 100;
    spec.adls = 40;
    return segment_all(generate_synthetic(spec), DatasetConfig::synthetic());
  }();
  return w;
}

const eval::LabeledFeatures& featurized() {
  static const auto d = eval::featurize(windows(), features::FeatureRegistry::default_registry(), 1);
  return d;
}

fedt::TrainingSet training_set() {
  const auto& d = featurized();
  fedt::TrainingSet ts;
  for (std::size_t i = 0; i < d.size(); ++i) ts.add(d.x.row(i), d.labels[i]);
  ts.fingerprint = d.fingerprint;
  ts.registry = d.registry;
  return ts;
}

}  // namespace

static void BM_ExtractFeatures(benchmark::State& state) {
  const auto reg = features::FeatureRegistry::default_registry();
  const auto& w = windows().front();
  for (auto _ : state) benchmark::DoNotOptimize(features::extract_features(w, reg, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_ExtractFeatures);

static void BM_ExtractBatch(benchmark::State& state) {
  const auto reg = features::FeatureRegistry::default_registry();
  const auto& w = windows();
  for (auto _ : state) benchmark::DoNotOptimize(features::extract_batch(w, reg, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.size()));
}
BENCHMARK(BM_ExtractBatch)->Unit(benchmark::kMillisecond);

static void BM_Train(benchmark::State& state) {
  const auto ts = training_set();
  fedt::Hyperparameters hp;
  hp.rounds = static_cast<std::size_t>(state.range(0));
  hp.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fedt::train(ts, hp));
  state.counters["rows"] = static_cast<double>(ts.rows);
}
BENCHMARK(BM_Train)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  const auto ts = training_set();
  fedt::Hyperparameters hp;
  hp.threads = 1;
  const auto model = fedt::train(ts, hp);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedt::predict_margin(model, ts.row(i)));
    i = (i + 1) % ts.rows;
  }
}
BENCHMARK(BM_Predict);

static void BM_WireEncode(benchmark::State& state) {
  const auto payload = wire::make_window_payload(1, windows().front().samples);
  for (auto _ : state) benchmark::DoNotOptimize(wire::encode_frame(wire::to_frame(payload)));
}
BENCHMARK(BM_WireEncode);

static void BM_WireDecode(benchmark::State& state) {
  const auto bytes = wire::encode_frame(wire::to_frame(wire::make_window_payload(1, windows().front().samples)));
  for (auto _ : state) {
    const auto r = wire::decode_frame(bytes);
    benchmark::DoNotOptimize(wire::parse_window(r.frame.payload));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_WireDecode);
BENCHMARK_MAIN();
