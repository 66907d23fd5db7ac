#pragma once

#include <cstddef>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fallcloud/signal.hpp"

namespace fallcloud::features {

// Single-series features. Each takes one channel of a window.

struct FftCoefficient {
  double real = 0.0;
  double imag = 0.0;
  double abs = 0.0;
};

/// Direct DFT term C_k = sum_m a_m exp(-2 pi i m k / n). Throws
/// Errc::Parameter for k >= n.
FftCoefficient fft_coefficient(std::span<const double> series, std::size_t k);

double abs_energy(std::span<const double> series);

/// Sum of |t[i+1] - t[i]|. Needs at least two values.
double absolute_changes(std::span<const double> series);

struct ChunkRatios {
  std::vector<double> ratios;
  /// Set when total energy is zero and the uniform vector was returned.
  bool degenerate = false;
};

/// Contiguous chunks, the first n mod N one element longer; ratio of each
/// chunk's sum of squares to the total.
ChunkRatios energy_ratio_by_chunks(std::span<const double> series, std::size_t num_chunks);

/// First argmax divided by the series length, in [0, 1).
double first_location_of_maximum(std::span<const double> series);

double mean(std::span<const double> series);
/// Population standard deviation.
double standard_deviation(std::span<const double> series);
double minimum(std::span<const double> series);
double maximum(std::span<const double> series);
double median(std::span<const double> series);

enum class Channel : std::uint8_t { X, Y, Z, Rms };

std::string_view to_string(Channel c) noexcept;
Channel parse_channel(std::string_view text);

using Params = std::map<std::string, std::string, std::less<>>;

/// Evaluates one scalar; sets `flag` for degenerate inputs it papered over.
using FeatureFn = std::function<double(std::span<const double>, bool& flag)>;

/// Maps feature names to factories that bind parameters into an evaluator.
/// Factories validate parameters eagerly and throw Errc::Parameter.
class FeatureCatalog {
 public:
  using Factory = std::function<FeatureFn(const Params&)>;

  struct Entry {
    Factory factory;
    /// Plumbing statistics rather than one of the representative families.
    bool baseline = false;
  };

  void add(std::string name, Factory factory, bool baseline = false);
  const Entry& find(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// fft_coefficient, abs_energy, absolute_changes, energy_ratio_by_chunks,
  /// first_location_of_maximum; baseline mean, standard_deviation, minimum,
  /// maximum, median.
  static const FeatureCatalog& builtin();

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

struct FeatureSpec {
  std::string name;
  Params params;
  std::vector<Channel> channels;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered, immutable list of features. Output order: for each spec in
/// order, one value per listed channel.
class FeatureRegistry {
 public:
  explicit FeatureRegistry(std::vector<FeatureSpec> specs,
                           const FeatureCatalog& catalog = FeatureCatalog::builtin());

  /// Representative families (fft modulus k = 0..9, abs_energy,
  /// absolute_changes, 10 energy chunks, first_location_of_maximum) plus
  /// baseline statistics, each over x, y, z and rms.
  static FeatureRegistry default_registry();

  /// Inverse of canonical(). Throws Errc::Parameter on unknown names.
  static FeatureRegistry parse(std::string_view canonical,
                               const FeatureCatalog& catalog = FeatureCatalog::builtin());

  /// One line per spec: name|key=value;...|channel,channel
  const std::string& canonical() const noexcept { return canonical_; }
  /// 64-bit FNV-1a of canonical().
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  std::size_t arity() const noexcept { return arity_; }
  const std::vector<FeatureSpec>& specs() const noexcept { return specs_; }
  std::vector<std::string> output_names() const;
  /// Human-readable listing that marks baseline entries.
  std::string describe() const;

  /// Evaluator bound to spec i.
  const FeatureFn& evaluator(std::size_t i) const { return evaluators_[i]; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

 private:
  std::vector<FeatureSpec> specs_;
  std::vector<FeatureFn> evaluators_;
  std::vector<std::size_t> offsets_;
  std::vector<bool> baseline_;
  std::string canonical_;
  std::uint64_t fingerprint_ = 0;
  std::size_t arity_ = 0;
};

std::uint64_t fnv1a64(std::string_view text) noexcept;
std::string fingerprint_hex(std::uint64_t fingerprint);

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t fingerprint = 0;
  /// Non-finite outputs were replaced by 0, or a feature hit a degenerate case.
  bool flagged = false;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Channel series of a window, in Channel order.
std::array<std::vector<double>, 4> channels_of(std::span<const TriaxialSample> samples);

/// Applies every registry feature to its channels. Output is identical for
/// any `threads` value. Feature errors are rethrown with the feature name.
FeatureVector extract_features(const Window& window, const FeatureRegistry& registry,
                               std::size_t threads = 1);
FeatureVector extract_features(std::span<const TriaxialSample> samples,
                               const FeatureRegistry& registry, std::size_t threads = 1);

/// Parallel over windows; element i corresponds to windows[i].
std::vector<FeatureVector> extract_batch(std::span<const Window> windows,
                                         const FeatureRegistry& registry, std::size_t threads = 0);

}  // namespace fallcloud::features
