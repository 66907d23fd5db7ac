#include "fallcloud/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "fallcloud/error.hpp"
#include "fallcloud/parallel.hpp"

namespace fallcloud::features {

namespace {

void require_nonempty(std::span<const double> series, const char* what) {
  if (series.empty()) throw Error(Errc::EmptyInput, fmt::format("{} of an empty series", what));
}

}  // namespace

FftCoefficient fft_coefficient(std::span<const double> series, std::size_t k) {
  const std::size_t n = series.size();
  if (k >= n) {
    throw Error(Errc::Parameter, fmt::format("fft coefficient {} out of range for length {}", k, n));
  }
  double re = 0.0;
  double im = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    // Reduce m*k modulo n before scaling so large products keep precision.
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((m * k) % n) / static_cast<double>(n);
    re += series[m] * std::cos(angle);
    im -= series[m] * std::sin(angle);
  }
  return {re, im, std::hypot(re, im)};
}

double abs_energy(std::span<const double> series) {
  require_nonempty(series, "abs_energy");
  double sum = 0.0;
  for (double v : series) sum += v * v;
  return sum;
}

double absolute_changes(std::span<const double> series) {
  if (series.size() < 2) throw Error(Errc::EmptyInput, "absolute_changes needs at least two values");
  double sum = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i) sum += std::abs(series[i] - series[i - 1]);
  return sum;
}

ChunkRatios energy_ratio_by_chunks(std::span<const double> series, std::size_t num_chunks) {
  if (num_chunks == 0) throw Error(Errc::Parameter, "energy_ratio_by_chunks needs num_chunks >= 1");
  require_nonempty(series, "energy_ratio_by_chunks");
  const std::size_t n = series.size();
  const std::size_t base = n / num_chunks;
  const std::size_t longer = n % num_chunks;
  ChunkRatios out;
  out.ratios.resize(num_chunks);
  double total = 0.0;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < num_chunks; ++c) {
    const std::size_t len = base + (c < longer ? 1 : 0);
    double chunk = 0.0;
    for (std::size_t i = pos; i < pos + len; ++i) chunk += series[i] * series[i];
    out.ratios[c] = chunk;
    total += chunk;
    pos += len;
  }
  if (total == 0.0) {
    std::fill(out.ratios.begin(), out.ratios.end(), 1.0 / static_cast<double>(num_chunks));
    out.degenerate = true;
    return out;
  }
  for (double& r : out.ratios) r /= total;
  return out;
}

double first_location_of_maximum(std::span<const double> series) {
  require_nonempty(series, "first_location_of_maximum");
  return static_cast<double>(first_argmax(series)) / static_cast<double>(series.size());
}

double mean(std::span<const double> series) {
  require_nonempty(series, "mean");
  double sum = 0.0;
  for (double v : series) sum += v;
  return sum / static_cast<double>(series.size());
}

double standard_deviation(std::span<const double> series) {
  const double mu = mean(series);
  double sum = 0.0;
  for (double v : series) sum += (v - mu) * (v - mu);
  return std::sqrt(sum / static_cast<double>(series.size()));
}

double minimum(std::span<const double> series) {
  require_nonempty(series, "minimum");
  return *std::min_element(series.begin(), series.end());
}

double maximum(std::span<const double> series) {
  require_nonempty(series, "maximum");
  return *std::max_element(series.begin(), series.end());
}

double median(std::span<const double> series) {
  require_nonempty(series, "median");
  std::vector<double> v(series.begin(), series.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::string_view to_string(Channel c) noexcept {
  switch (c) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::Z: return "z";
    case Channel::Rms: return "rms";
  }
  return "?";
}

Channel parse_channel(std::string_view text) {
  if (text == "x") return Channel::X;
  if (text == "y") return Channel::Y;
  if (text == "z") return Channel::Z;
  if (text == "rms") return Channel::Rms;
  throw Error(Errc::Parameter, fmt::format("unknown channel '{}'", text));
}

// ---- catalog ---------------------------------------------------------------

namespace {

std::size_t size_param(const Params& p, std::string_view key) {
  const auto it = p.find(key);
  if (it == p.end()) throw Error(Errc::Parameter, fmt::format("missing parameter '{}'", key));
  std::size_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::Parameter, fmt::format("parameter '{}' must be a non-negative integer", key));
  }
  return v;
}

void no_params(const Params& p) {
  if (!p.empty()) throw Error(Errc::Parameter, "feature takes no parameters");
}

template <double (*F)(std::span<const double>)>
FeatureCatalog::Factory plain() {
  return [](const Params& p) -> FeatureFn {
    no_params(p);
    return [](std::span<const double> s, bool&) { return F(s); };
  };
}

FeatureCatalog make_builtin() {
  FeatureCatalog cat;
  cat.add("fft_coefficient", [](const Params& p) -> FeatureFn {
    const std::size_t k = size_param(p, "coeff");
    const auto attr_it = p.find("attr");
    const std::string attr = attr_it == p.end() ? "abs" : attr_it->second;
    if (attr != "abs" && attr != "real" && attr != "imag") {
      throw Error(Errc::Parameter, "fft_coefficient attr must be abs, real or imag");
    }
    for (const auto& [key, v] : p) {
      if (key != "coeff" && key != "attr") throw Error(Errc::Parameter, "unknown parameter '" + key + "'");
    }
    return [k, attr](std::span<const double> s, bool&) {
      const auto c = fft_coefficient(s, k);
      return attr == "abs" ? c.abs : attr == "real" ? c.real : c.imag;
    };
  });
  cat.add("abs_energy", plain<abs_energy>());
  cat.add("absolute_changes", plain<absolute_changes>());
  cat.add("energy_ratio_by_chunks", [](const Params& p) -> FeatureFn {
    const std::size_t chunks = size_param(p, "num_segments");
    const std::size_t focus = size_param(p, "segment_focus");
    if (chunks == 0 || focus >= chunks) {
      throw Error(Errc::Parameter, "energy_ratio_by_chunks needs segment_focus < num_segments");
    }
    return [chunks, focus](std::span<const double> s, bool& flag) {
      auto r = energy_ratio_by_chunks(s, chunks);
      flag = flag || r.degenerate;
      return r.ratios[focus];
    };
  });
  cat.add("first_location_of_maximum", plain<first_location_of_maximum>());
  cat.add("mean", plain<mean>(), true);
  cat.add("standard_deviation", plain<standard_deviation>(), true);
  cat.add("minimum", plain<minimum>(), true);
  cat.add("maximum", plain<maximum>(), true);
  cat.add("median", plain<median>(), true);
  return cat;
}

bool valid_token(std::string_view s) {
  return !s.empty() && s.find_first_of("|;=,\n\r") == std::string_view::npos;
}

}  // namespace

void FeatureCatalog::add(std::string name, Factory factory, bool baseline) {
  if (!valid_token(name)) throw Error(Errc::Parameter, "invalid feature name '" + name + "'");
  entries_[std::move(name)] = Entry{std::move(factory), baseline};
}

const FeatureCatalog::Entry& FeatureCatalog::find(std::string_view name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(Errc::Parameter, fmt::format("unknown feature '{}'", name));
  return it->second;
}

bool FeatureCatalog::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const FeatureCatalog& FeatureCatalog::builtin() {
  static const FeatureCatalog cat = make_builtin();
  return cat;
}

// ---- registry --------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t fingerprint) { return fmt::format("{:016x}", fingerprint); }

FeatureRegistry::FeatureRegistry(std::vector<FeatureSpec> specs, const FeatureCatalog& catalog)
    : specs_(std::move(specs)) {
  std::vector<std::string> seen;
  for (const auto& spec : specs_) {
    const auto& entry = catalog.find(spec.name);
    if (spec.channels.empty()) throw Error(Errc::Parameter, "feature '" + spec.name + "' has no channels");
    for (const auto& [k, v] : spec.params) {
      if (!valid_token(k) || !valid_token(v)) {
        throw Error(Errc::Parameter, "feature '" + spec.name + "' has an unserializable parameter");
      }
    }
    try {
      evaluators_.push_back(entry.factory(spec.params));
    } catch (const Error& e) {
      throw Error(e.code(), "feature '" + spec.name + "': " + e.what());
    }
    baseline_.push_back(entry.baseline);
    offsets_.push_back(arity_);
    arity_ += spec.channels.size();

    std::string line = spec.name + "|";
    bool first = true;
    for (const auto& [k, v] : spec.params) {
      line += (first ? "" : ";") + k + "=" + v;
      first = false;
    }
    line += "|";
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
      line += (c ? "," : "") + std::string(to_string(spec.channels[c]));
    }
    if (std::find(seen.begin(), seen.end(), line) != seen.end()) {
      throw Error(Errc::Parameter, "duplicate feature entry '" + line + "'");
    }
    seen.push_back(line);
    canonical_ += line + "\n";
  }
  if (arity_ == 0) throw Error(Errc::Parameter, "feature registry is empty");
  fingerprint_ = fnv1a64(canonical_);
}

FeatureRegistry FeatureRegistry::default_registry() {
  const std::vector<Channel> all = {Channel::X, Channel::Y, Channel::Z, Channel::Rms};
  std::vector<FeatureSpec> specs;
  for (std::size_t k = 0; k < 10; ++k) {
    specs.push_back({"fft_coefficient", {{"attr", "abs"}, {"coeff", std::to_string(k)}}, all});
  }
  specs.push_back({"abs_energy", {}, all});
  specs.push_back({"absolute_changes", {}, all});
  for (std::size_t i = 0; i < 10; ++i) {
    specs.push_back({"energy_ratio_by_chunks",
                     {{"num_segments", "10"}, {"segment_focus", std::to_string(i)}}, all});
  }
  specs.push_back({"first_location_of_maximum", {}, all});
  for (const char* name : {"mean", "standard_deviation", "minimum", "maximum", "median"}) {
    specs.push_back({name, {}, all});
  }
  return FeatureRegistry(std::move(specs));
}

FeatureRegistry FeatureRegistry::parse(std::string_view canonical, const FeatureCatalog& catalog) {
  std::vector<FeatureSpec> specs;
  std::size_t pos = 0;
  while (pos < canonical.size()) {
    auto next = canonical.find('\n', pos);
    if (next == std::string_view::npos) next = canonical.size();
    const auto line = canonical.substr(pos, next - pos);
    pos = next + 1;
    if (line.empty()) continue;
    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string_view::npos ? bar1 : line.find('|', bar1 + 1);
    if (bar2 == std::string_view::npos) {
      throw Error(Errc::Parameter, fmt::format("malformed registry line '{}'", line));
    }
    FeatureSpec spec;
    spec.name = std::string(line.substr(0, bar1));
    auto params = line.substr(bar1 + 1, bar2 - bar1 - 1);
    while (!params.empty()) {
      const auto semi = params.find(';');
      const auto kv = params.substr(0, semi);
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) throw Error(Errc::Parameter, "malformed registry parameter");
      spec.params.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
      params = semi == std::string_view::npos ? std::string_view{} : params.substr(semi + 1);
    }
    auto chans = line.substr(bar2 + 1);
    while (!chans.empty()) {
      const auto comma = chans.find(',');
      spec.channels.push_back(parse_channel(chans.substr(0, comma)));
      chans = comma == std::string_view::npos ? std::string_view{} : chans.substr(comma + 1);
    }
    specs.push_back(std::move(spec));
  }
  return FeatureRegistry(std::move(specs), catalog);
}

std::vector<std::string> FeatureRegistry::output_names() const {
  std::vector<std::string> names;
  names.reserve(arity_);
  for (const auto& spec : specs_) {
    std::string suffix;
    for (const auto& [k, v] : spec.params) suffix += "__" + k + "_" + v;
    for (auto c : spec.channels) names.push_back(std::string(to_string(c)) + "__" + spec.name + suffix);
  }
  return names;
}

std::string FeatureRegistry::describe() const {
  std::ostringstream out;
  out << "registry " << fingerprint_hex(fingerprint_) << " (" << arity_ << " outputs)\n";
  std::size_t i = 0;
  std::istringstream lines(canonical_);
  for (std::string line; std::getline(lines, line); ++i) {
    out << (baseline_[i] ? "  [baseline] " : "  ") << line << "\n";
  }
  return out.str();
}

// ---- extraction ------------------------------------------------------------

std::array<std::vector<double>, 4> channels_of(std::span<const TriaxialSample> samples) {
  std::array<std::vector<double>, 4> ch;
  for (auto& c : ch) c.reserve(samples.size());
  for (const auto& s : samples) {
    ch[0].push_back(s.x);
    ch[1].push_back(s.y);
    ch[2].push_back(s.z);
    ch[3].push_back(rms(s));
  }
  return ch;
}

FeatureVector extract_features(std::span<const TriaxialSample> samples, const FeatureRegistry& registry,
                               std::size_t threads) {
  if (samples.empty()) throw Error(Errc::EmptyInput, "cannot extract features from an empty window");
  const auto channels = channels_of(samples);
  FeatureVector out;
  out.values.assign(registry.arity(), 0.0);
  out.fingerprint = registry.fingerprint();
  const auto& specs = registry.specs();
  std::vector<char> flags(specs.size(), 0);
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    const auto& spec = specs[i];
    const auto& fn = registry.evaluator(i);
    bool flag = false;
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
      double v = 0.0;
      try {
        v = fn(channels[static_cast<std::size_t>(spec.channels[c])], flag);
      } catch (const Error& e) {
        throw Error(e.code(), fmt::format("feature '{}' on channel {}: {}", spec.name,
                                          to_string(spec.channels[c]), e.what()));
      }
      if (!std::isfinite(v)) {
        v = 0.0;
        flag = true;
      }
      out.values[registry.offset(i) + c] = v;
    }
    flags[i] = flag ? 1 : 0;
  });
  out.flagged = std::any_of(flags.begin(), flags.end(), [](char f) { return f != 0; });
  return out;
}

FeatureVector extract_features(const Window& window, const FeatureRegistry& registry, std::size_t threads) {
  return extract_features(std::span<const TriaxialSample>(window.samples), registry, threads);
}

std::vector<FeatureVector> extract_batch(std::span<const Window> windows, const FeatureRegistry& registry,
                                         std::size_t threads) {
  std::vector<FeatureVector> out(windows.size());
  parallel_for(windows.size(), threads,
               [&](std::size_t i) { out[i] = extract_features(windows[i], registry, 1); });
  return out;
}

}  // namespace fallcloud::features
