// fallcloud: command-line front end for the fall-detection pipeline.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fallcloud/edge.hpp"
#include "fallcloud/evaluate.hpp"
#include "fallcloud/features.hpp"
#include "fallcloud/fedt.hpp"
#include "fallcloud/ingest.hpp"
#include "fallcloud/service.hpp"
#include "fallcloud/signal.hpp"
#include "fallcloud/synthetic.hpp"
#include "fallcloud/threshold.hpp"
#include "fallcloud/windows_io.hpp"

namespace fs = std::filesystem;
using namespace fallcloud;
using json = nlohmann::json;

namespace {

// ---- file helpers -------------------------------------------------------

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot open {}", path.string()));
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

/// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + fmt::format(".tmp{}", ::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, fmt::format("cannot write {}", tmp.string()));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(Errc::Io, fmt::format("short write to {}", tmp.string()));
    }
  }
  fs::rename(tmp, path);
}

void write_atomic(const fs::path& path, const Bytes& data) {
  write_atomic(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

WindowSet load_windows(const fs::path& path) { return decode_windows(read_file(path)); }

fedt::FedtModel load_model_file(const fs::path& path) { return fedt::load_model(read_file(path)); }

Threshold load_threshold(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, fmt::format("cannot open {}", path.string()));
  return read_threshold(in);
}

features::FeatureRegistry load_registry(const std::string& path) {
  if (path.empty()) return features::FeatureRegistry::default_registry();
  const auto bytes = read_file(path);
  return features::FeatureRegistry::parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// ---- shared option groups ----------------------------------------------

struct SourceOpts {
  std::string input;
  std::string adapter = "generic";
  double rate = 0.0;
  std::string label;
  std::string dataset;
  std::string device;
  std::size_t threads = 0;

  void add(CLI::App& app) {
    app.add_option("-i,--input", input, "File, directory, or for --adapter synthetic a generator spec")->required();
    app.add_option("-a,--adapter", adapter, "Input adapter")
        ->check(CLI::IsMember(adapter_ids()));
    app.add_option("--rate", rate, "Sample rate override (Hz)");
    app.add_option("--label", label, "Force label for every recording (ADL|FALL)");
    app.add_option("--dataset", dataset, "Dataset name recorded in windows");
    app.add_option("--device", device, "Device name recorded in recordings");
  }

  std::vector<TriaxialRecording> load() const {
    IngestOptions o;
    o.sample_rate_hz = rate;
    if (!label.empty()) o.label = parse_label(label);
    o.dataset = dataset;
    o.device = device;
    o.threads = threads;
    return ingest(input, adapter, o);
  }
};

struct ModelOpts {
  fedt::Hyperparameters hp;
  double positive_weight = 0.0;

  void add(CLI::App& app) {
    app.add_option("--rounds", hp.rounds, "Boosting rounds M")->capture_default_str();
    app.add_option("--alpha", hp.alpha, "Per-leaf penalty")->capture_default_str();
    app.add_option("--beta", hp.beta, "Leaf weight L2 penalty")->capture_default_str();
    app.add_option("--eta", hp.learning_rate, "Learning rate")->capture_default_str();
    app.add_option("--max-depth", hp.max_depth, "Maximum tree depth")->capture_default_str();
    app.add_option("--min-child-hessian", hp.min_child_hessian, "Minimum hessian per child")->capture_default_str();
    app.add_option("--positive-weight", positive_weight, "FALL example weight (default N_adl/N_fall)");
    app.add_option("--cutoff", hp.cutoff, "FALL probability cutoff")->capture_default_str();
  }

  fedt::Hyperparameters resolved(std::size_t threads) const {
    auto p = hp;
    if (positive_weight > 0) p.positive_weight = positive_weight;
    p.threads = threads;
    return p;
  }
};

void print_reference_deltas(const eval::MetricsReport& r, const std::optional<eval::ReferenceResult>& ref,
                            std::string_view label) {
  if (!ref) return;
  fmt::print("{} reference ({}): sensitivity {:.4f} (delta {:+.2f} pp), specificity {:.4f} (delta {:+.2f} pp)\n",
             label, ref->dataset, ref->sensitivity, 100.0 * (r.metrics.sensitivity - ref->sensitivity),
             ref->specificity, 100.0 * (r.metrics.specificity - ref->specificity));
}

std::atomic<service::CloudService*> g_service{nullptr};

void on_signal(int) {
  // stop() joins threads, so hand it to a detached helper.
  if (auto* s = g_service.exchange(nullptr)) std::thread([s] { s->stop(); }).detach();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fallcloud: threshold-gated FEDT fall detection"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::uint64_t seed = 42;
  bool verbose = false;
  app.add_option("-j,--threads", threads, "Worker threads (0 = all cores)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // generate
  auto* gen = app.add_subcommand("generate", "Write synthetic recordings as CSV files");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "Generator spec, e.g. seed=7,falls=200,adls=120");
  gen->add_option("-o,--out", gen_out, "Output directory")->required();

  // segment
  auto* seg = app.add_subcommand("segment", "Segment recordings into labeled windows");
  SourceOpts seg_src;
  seg_src.add(*seg);
  std::size_t seg_ws = 0, seg_stride = 0;
  std::string seg_out;
  seg->add_option("--window-size", seg_ws, "Window length in samples (default per adapter)");
  seg->add_option("--stride", seg_stride, "ADL stride in samples (default window-size/2)");
  seg->add_option("-o,--out", seg_out, "Windows file")->required();

  // fit-threshold
  auto* fit = app.add_subcommand("fit-threshold", "Fit the RMS gate on training falls");
  std::string fit_in, fit_out;
  double fit_safety = 0.9;
  fit->add_option("-w,--windows", fit_in, "Windows file")->required()->check(CLI::ExistingFile);
  fit->add_option("--safety", fit_safety, "Safety factor in (0,1]")->capture_default_str();
  fit->add_option("-o,--out", fit_out, "Threshold file")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train an FEDT model");
  std::string trn_in, trn_out, trn_log, trn_registry, trn_id;
  ModelOpts trn_model;
  trn->add_option("-w,--windows", trn_in, "Windows file")->required()->check(CLI::ExistingFile);
  trn->add_option("-o,--out", trn_out, "Model file")->required();
  trn->add_option("--log", trn_log, "Training log (JSON)");
  trn->add_option("--registry", trn_registry, "Feature registry file (canonical text)");
  trn->add_option("--model-id", trn_id, "Identifier embedded in the model");
  trn_model.add(*trn);

  // eval
  auto* evl = app.add_subcommand("eval", "k-fold cross-validation");
  std::string evl_in, evl_out, evl_registry, evl_scheme = "stratified";
  std::size_t evl_k = 10;
  double evl_safety = 0.9;
  bool evl_no_gate = false;
  ModelOpts evl_model;
  evl->add_option("-w,--windows", evl_in, "Windows file")->required()->check(CLI::ExistingFile);
  evl->add_option("-k,--folds", evl_k, "Number of folds")->capture_default_str();
  evl->add_option("--scheme", evl_scheme, "Fold scheme")->check(CLI::IsMember({"stratified", "subject"}));
  evl->add_option("--safety", evl_safety, "Gate safety factor")->capture_default_str();
  evl->add_flag("--no-gate", evl_no_gate, "Classify every window with the model");
  evl->add_option("--registry", evl_registry, "Feature registry file");
  evl->add_option("-o,--out", evl_out, "Report file (JSON)");
  evl_model.add(*evl);

  // pca
  auto* pca = app.add_subcommand("pca", "PCA ablation: same folds with and without PCA");
  std::string pca_in, pca_out;
  std::size_t pca_k = 10;
  double pca_fraction = 0.95;
  ModelOpts pca_model;
  pca->add_option("-w,--windows", pca_in, "Windows file")->required()->check(CLI::ExistingFile);
  pca->add_option("-k,--folds", pca_k, "Number of folds")->capture_default_str();
  pca->add_option("--fraction", pca_fraction, "Retained variance fraction")->capture_default_str();
  pca->add_option("-o,--out", pca_out, "Report file (JSON)");
  pca_model.add(*pca);

  // robustness
  auto* rob = app.add_subcommand("robustness", "Train on one windows file, test on another");
  std::string rob_train, rob_test, rob_out;
  ModelOpts rob_model;
  rob->add_option("--train", rob_train, "Training windows file")->required()->check(CLI::ExistingFile);
  rob->add_option("--test", rob_test, "Test windows file")->required()->check(CLI::ExistingFile);
  rob->add_option("-o,--out", rob_out, "Report file (JSON)");
  rob_model.add(*rob);

  // serve
  auto* srv = app.add_subcommand("serve", "Run the cloud inference service");
  std::string srv_addr = env_or("FEDT_ADDR", "127.0.0.1:7878");
  std::string srv_model = env_or("FEDT_MODEL", "");
  std::size_t srv_max_payload = wire::kDefaultMaxPayload;
  if (const char* mp = std::getenv("FEDT_MAX_PAYLOAD")) srv_max_payload = std::strtoull(mp, nullptr, 10);
  std::size_t srv_sessions = 256;
  std::string srv_port_file;
  srv->add_option("--addr", srv_addr, "Listen address host:port (env FEDT_ADDR)")->capture_default_str();
  srv->add_option("-m,--model", srv_model, "Model file (env FEDT_MODEL)");
  srv->add_option("--max-payload", srv_max_payload, "Maximum frame payload bytes (env FEDT_MAX_PAYLOAD)")
      ->capture_default_str();
  srv->add_option("--max-sessions", srv_sessions, "Concurrent session limit")->capture_default_str();
  srv->add_option("--port-file", srv_port_file, "Write the bound port here once listening");

  // replay
  auto* rep = app.add_subcommand("replay", "Replay recordings through the gate against a service");
  SourceOpts rep_src;
  rep_src.add(*rep);
  std::string rep_threshold, rep_addr = env_or("FEDT_ADDR", "127.0.0.1:7878"), rep_out, rep_registry;
  std::size_t rep_ws = 0, rep_lookback = 0;
  bool rep_realtime = false;
  rep->add_option("-t,--threshold", rep_threshold, "Threshold file")->required()->check(CLI::ExistingFile);
  rep->add_option("--addr", rep_addr, "Service address (env FEDT_ADDR)")->capture_default_str();
  rep->add_option("--window-size", rep_ws, "Escalated window length (default per adapter)");
  rep->add_option("--lookback", rep_lookback, "Samples before the peak (default window-size/2)");
  rep->add_option("--registry", rep_registry, "Feature registry file");
  rep->add_flag("--realtime", rep_realtime, "Pace replay by the sample rate");
  rep->add_option("-o,--out", rep_out, "Session log (JSON)");

  for (auto* sub : {seg, trn, evl, pca, rob}) {
    sub->add_option("--seed", seed, "Seed recorded in outputs and used for folds")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  seg_src.threads = rep_src.threads = threads;

  try {
    if (*gen) {
      const auto spec = gen_spec.empty() ? SyntheticSpec{} : parse_synthetic_spec(gen_spec);
      const auto recs = generate_synthetic(spec);
      fs::create_directories(gen_out);
      for (const auto& r : recs) {
        std::ostringstream os;
        write_generic(os, r);
        write_atomic(fs::path(gen_out) / (r.id + ".csv"), os.str());
      }
      write_atomic(fs::path(gen_out) / "SPEC", spec.to_string() + "\n");
      fmt::print("wrote {} recordings to {} ({})\n", recs.size(), gen_out, spec.to_string());
      return 0;
    }

    if (*seg) {
      const auto recs = seg_src.load();
      auto cfg = DatasetConfig::for_adapter(seg_src.adapter);
      if (seg_ws) {
        cfg.window_size = seg_ws;
        cfg.stride = seg_ws / 2;
      }
      if (seg_stride) cfg.stride = seg_stride;
      cfg.validate();
      WindowSet set;
      set.config = cfg;
      set.windows = segment_all(recs, cfg);
      set.provenance = fmt::format("segment input={} adapter={} window_size={} stride={} seed={}", seg_src.input,
                                   seg_src.adapter, cfg.window_size, cfg.stride, seed);
      write_atomic(seg_out, encode_windows(set));
      fmt::print("recordings: {}\nwindow size: {}  stride: {}\nfall windows: {}\nadl windows: {}\n", recs.size(),
                 cfg.window_size, cfg.stride, set.fall_count(), set.adl_count());
      const auto ref_name = seg_src.dataset.empty() ? seg_src.adapter : seg_src.dataset;
      if (const auto ref = eval::reference_counts(ref_name)) {
        fmt::print("reference ({}): {} fall / {} adl (delta {:+} / {:+}, stride {})\n", ref->dataset, ref->falls,
                   ref->adls, static_cast<long long>(set.fall_count()) - static_cast<long long>(ref->falls),
                   static_cast<long long>(set.adl_count()) - static_cast<long long>(ref->adls), cfg.stride);
      }
      return 0;
    }

    if (*fit) {
      const auto set = load_windows(fit_in);
      const auto th = fit_threshold(set.windows, fit_safety);
      std::ostringstream os;
      write_threshold(os, th);
      write_atomic(fit_out, os.str());
      fmt::print("tau = {:.6g} from {} falls (safety {})\n", th.tau, th.fall_count, th.safety_factor);
      return 0;
    }

    if (*trn) {
      const auto set = load_windows(trn_in);
      const auto registry = load_registry(trn_registry);
      const auto data = eval::featurize(set.windows, registry, threads);
      fedt::TrainingSet ts;
      ts.cols = data.x.cols;
      ts.fingerprint = data.fingerprint;
      ts.registry = data.registry;
      for (std::size_t i = 0; i < data.size(); ++i) ts.add(data.x.row(i), data.labels[i]);
      fedt::TrainingLog log;
      auto model = fedt::train(ts, trn_model.resolved(threads), &log);
      model.model_id = trn_id.empty() ? fmt::format("fedt-{}-m{}-seed{}", features::fingerprint_hex(model.fingerprint),
                                                    model.trees.size(), seed)
                                      : trn_id;
      write_atomic(trn_out, fedt::save_model(model));
      json jlog;
      jlog["model_id"] = model.model_id;
      jlog["seed"] = seed;
      jlog["windows"] = set.provenance;
      jlog["positive_weight"] = log.positive_weight;
      jlog["total_leaves"] = model.total_leaves();
      json rounds = json::array();
      bool all_single = true;
      for (const auto& r : log.rounds) {
        rounds.push_back({{"round", r.round}, {"objective", r.objective}, {"leaves", r.leaves}});
        all_single = all_single && r.leaves == 1;
      }
      jlog["rounds"] = rounds;
      jlog["all_single_leaf"] = all_single;
      if (!trn_log.empty()) write_atomic(trn_log, jlog.dump(2) + "\n");
      fmt::print("trained {} trees, {} leaves, final objective {:.6g}{}\nmodel: {}\n", model.trees.size(),
                 model.total_leaves(), log.rounds.empty() ? 0.0 : log.rounds.back().objective,
                 all_single ? " (all trees single-leaf)" : "", model.model_id);
      return 0;
    }

    if (*evl) {
      const auto set = load_windows(evl_in);
      eval::PipelineConfig cfg;
      cfg.model = evl_model.resolved(1);
      cfg.safety_factor = evl_safety;
      cfg.use_gate = !evl_no_gate;
      cfg.scheme = evl_scheme == "subject" ? eval::FoldScheme::Subject : eval::FoldScheme::Stratified;
      cfg.threads = threads;
      const auto report = eval::kfold_evaluate(set.windows, evl_k, cfg, seed, load_registry(evl_registry));
      fmt::print("{}", eval::to_table(report));
      print_reference_deltas(report, eval::reference_result(report.dataset), "published");
      if (!evl_out.empty()) write_atomic(evl_out, eval::to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*pca) {
      const auto set = load_windows(pca_in);
      eval::PipelineConfig cfg;
      cfg.model = pca_model.resolved(1);
      cfg.pca_fraction = pca_fraction;
      cfg.threads = threads;
      const auto ab = eval::pca_ablation(set.windows, pca_k, cfg, seed);
      fmt::print("without PCA\n{}with PCA ({:.0f}% variance)\n{}", eval::to_table(ab.without_pca),
                 100 * pca_fraction, eval::to_table(ab.with_pca));
      print_reference_deltas(ab.without_pca, eval::reference_result(ab.without_pca.dataset), "without PCA");
      print_reference_deltas(ab.with_pca, eval::reference_pca_result(ab.with_pca.dataset), "with PCA");
      if (!pca_out.empty()) {
        json j{{"without_pca", eval::to_json(ab.without_pca)}, {"with_pca", eval::to_json(ab.with_pca)}};
        write_atomic(pca_out, j.dump(2) + "\n");
      }
      return 0;
    }

    if (*rob) {
      const auto train_set = load_windows(rob_train);
      const auto test_set = load_windows(rob_test);
      eval::PipelineConfig cfg;
      cfg.model = rob_model.resolved(threads);
      cfg.threads = threads;
      auto report = eval::cross_device_eval(train_set.windows, test_set.windows, cfg);
      report.seed = seed;
      fmt::print("{}", eval::to_table(report));
      if (!rob_out.empty()) write_atomic(rob_out, eval::to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*srv) {
      if (srv_model.empty()) throw CLI::RequiredError("--model (or FEDT_MODEL)");
      auto model = load_model_file(srv_model);
      auto registry = features::FeatureRegistry::parse(model.registry);
      service::ServiceLimits limits;
      limits.max_payload = srv_max_payload;
      limits.max_sessions = srv_sessions;
      service::CloudService svc(std::move(model), std::move(registry), limits);
      svc.start(net::parse_endpoint(srv_addr));
      if (!srv_port_file.empty()) write_atomic(srv_port_file, fmt::format("{}\n", svc.port()));
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.wait();
      const auto st = svc.stats();
      spdlog::info("service stopped: {} sessions, {} windows, {} errors", st.sessions_accepted, st.windows_served,
                   st.errors_sent);
      return 0;
    }

    if (*rep) {
      const auto recs = rep_src.load();
      const auto th = load_threshold(rep_threshold);
      const auto registry = load_registry(rep_registry);
      edge::EdgeConfig cfg;
      cfg.window_size = rep_ws ? rep_ws : DatasetConfig::for_adapter(rep_src.adapter).window_size;
      cfg.lookback = rep_lookback ? rep_lookback : cfg.window_size / 2;
      cfg.realtime = rep_realtime;
      cfg.fingerprint = registry.fingerprint();
      const auto ep = net::parse_endpoint(rep_addr);
      json sessions = json::array();
      std::size_t sent = 0, falls = 0, undelivered = 0;
      for (const auto& rec : recs) {
        const auto log = edge::edge_sim(rec, th, cfg, ep);
        json entries = json::array();
        for (const auto& e : log.entries) {
          json je{{"trigger_index", e.trigger_index}, {"window_id", e.window_id}, {"delivered", e.delivered},
                  {"round_trip_us", e.round_trip.count()}};
          if (e.verdict) {
            je["label"] = to_string(e.verdict->label);
            je["probability"] = e.verdict->probability;
            je["service_latency_us"] = e.verdict->latency_us;
            falls += e.verdict->label == Label::Fall ? 1 : 0;
          }
          entries.push_back(std::move(je));
        }
        sent += log.frames_sent;
        undelivered += log.undelivered;
        sessions.push_back({{"recording", rec.id},
                            {"truth", to_string(rec.meta.label)},
                            {"frames_sent", log.frames_sent},
                            {"partial_triggers", log.partial_triggers},
                            {"undelivered", log.undelivered},
                            {"retries", log.retries},
                            {"model_id", log.model_id},
                            {"entries", std::move(entries)}});
      }
      fmt::print("replayed {} recordings: {} windows escalated, {} FALL verdicts, {} undelivered\n", recs.size(),
                 sent, falls, undelivered);
      if (!rep_out.empty()) {
        json j{{"address", rep_addr}, {"tau", th.tau}, {"sessions", std::move(sessions)}};
        write_atomic(rep_out, j.dump(2) + "\n");
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "fallcloud: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "fallcloud: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fallcloud: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
