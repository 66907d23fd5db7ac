#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fallcloud/error.hpp"
#include "fallcloud/fedt.hpp"
#include "fallcloud/signal.hpp"

#define CHECK_ERRC(expr, errc)                                   \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const ::fallcloud::Error& e_) {                     \
      thrown_ = true;                                            \
      CHECK_MESSAGE(e_.code() == (errc), std::string(e_.what()));           \
    }                                                            \
    CHECK_MESSAGE(thrown_, "expected fallcloud::Error from " #expr); \
  } while (0)

namespace testutil {

inline fallcloud::TriaxialRecording recording(std::vector<fallcloud::TriaxialSample> samples,
                                              fallcloud::Label label = fallcloud::Label::Adl,
                                              std::string id = "rec") {
  fallcloud::TriaxialRecording r;
  r.id = std::move(id);
  r.samples = std::move(samples);
  r.sample_rate_hz = 50.0;
  r.meta.label = label;
  r.meta.dataset = "test";
  return r;
}

/// Samples (v, 0, 0) so that rms equals |v|.
inline fallcloud::TriaxialRecording from_rms(const std::vector<double>& values,
                                             fallcloud::Label label = fallcloud::Label::Adl) {
  std::vector<fallcloud::TriaxialSample> s;
  for (double v : values) s.push_back({v, 0.0, 0.0});
  return recording(std::move(s), label);
}

inline std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

/// Two Gaussian blobs; FALL rows shifted by `gap` along every column.
inline fallcloud::fedt::TrainingSet blobs(std::size_t per_class, std::size_t cols, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  fallcloud::fedt::TrainingSet ts;
  ts.cols = cols;
  ts.fingerprint = 0xfeedu;
  std::vector<double> x(cols);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool fall = i % 2 == 1;
    for (std::size_t c = 0; c < cols; ++c) x[c] = noise(rng) + (fall ? gap : 0.0);
    ts.add(x, fall ? fallcloud::Label::Fall : fallcloud::Label::Adl);
  }
  return ts;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("fallcloud_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }
};

}  // namespace testutil
