#include "fallcloud/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "fallcloud/error.hpp"

namespace fallcloud {

namespace {

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::Parameter, fmt::format("synthetic spec: bad value '{}' for '{}'", text, key));
  }
  return value;
}

struct Rotation {
  // Small tilt of the gravity vector so recordings are not identical.
  double pitch, roll;
  TriaxialSample apply(double x, double y, double z) const {
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    const double x1 = cp * x + sp * z;
    const double z1 = -sp * x + cp * z;
    const double y2 = cr * y - sr * z1;
    const double z2 = sr * y + cr * z1;
    return {x1, y2, z2};
  }
};

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {}

  TriaxialRecording adl(std::size_t index) {
    TriaxialRecording rec = base("adl", index, Label::Adl, spec_.adl_length);
    const Gait gait = draw_gait();
    const Rotation tilt{uniform(-0.08, 0.08), uniform(-0.08, 0.08)};
    const bool jumps = uniform(0.0, 1.0) < spec_.jump_fraction;
    std::vector<std::size_t> landings;
    if (jumps) {
      const std::size_t count = 1 + static_cast<std::size_t>(uniform(0.0, 3.0));
      for (std::size_t j = 0; j < count; ++j) {
        landings.push_back(static_cast<std::size_t>(uniform(0.0, static_cast<double>(spec_.adl_length - 2))));
      }
    }
    std::vector<double> spike(spec_.adl_length, 0.0);
    for (auto at : landings) {
      const double height = uniform(2.5, 5.5);
      spike[at] += height;
      spike[at + 1] += 0.4 * height;
    }
    for (std::size_t i = 0; i < spec_.adl_length; ++i) {
      const double t = static_cast<double>(i) / spec_.sample_rate_hz;
      auto [gx, gy, gz] = gait.at(t);
      gz += 1.0 + spike[i];
      push(rec, tilt.apply(gx, gy, gz));
    }
    return rec;
  }

  TriaxialRecording fall(std::size_t index) {
    const std::size_t n = spec_.fall_length;
    TriaxialRecording rec = base("fall", index, Label::Fall, n);
    const Gait gait = draw_gait();
    const Rotation tilt{uniform(-0.08, 0.08), uniform(-0.08, 0.08)};
    const auto rate = spec_.sample_rate_hz;
    const std::size_t impact = n / 2 + static_cast<std::size_t>(uniform(-0.1, 0.1) * static_cast<double>(n));
    const std::size_t freefall = static_cast<std::size_t>(uniform(0.25, 0.45) * rate);
    const std::size_t impact_len = std::max<std::size_t>(4, static_cast<std::size_t>(uniform(0.12, 0.2) * rate));
    const double peak = uniform(3.5, 6.5);
    const double dir = uniform(0.0, 2.0 * std::numbers::pi);
    // Lying posture: gravity moves from z onto a horizontal axis.
    const double lie_x = std::cos(dir), lie_y = std::sin(dir);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      double x = 0, y = 0, z = 0;
      if (i + freefall < impact) {
        std::tie(x, y, z) = gait.at(t);
        z += 1.0;
      } else if (i < impact) {
        const double f = static_cast<double>(impact - i) / static_cast<double>(freefall);
        z = 0.1 + 0.3 * f;
      } else if (i < impact + impact_len) {
        const double decay = std::exp(-3.0 * static_cast<double>(i - impact) / static_cast<double>(impact_len));
        const double mag = 1.0 + (peak - 1.0) * decay;
        x = lie_x * mag * 0.8;
        y = lie_y * mag * 0.8;
        z = mag * 0.6;
      } else {
        x = lie_x;
        y = lie_y;
        z = 0.05;
      }
      push(rec, tilt.apply(x, y, z));
    }
    return rec;
  }

 private:
  struct Gait {
    double freq, amp_x, amp_y, amp_z, phase;
    std::tuple<double, double, double> at(double t) const {
      const double w = 2.0 * std::numbers::pi * freq * t + phase;
      return {amp_x * std::sin(w), amp_y * std::sin(0.5 * w + 1.0), amp_z * std::sin(2.0 * w)};
    }
  };

  Gait draw_gait() {
    const double s = spec_.noise_scale;
    return {uniform(0.8, 2.2), s * uniform(0.05, 0.3), s * uniform(0.02, 0.15),
            s * uniform(0.05, 0.35), uniform(0.0, 2.0 * std::numbers::pi)};
  }

  TriaxialRecording base(const char* kind, std::size_t index, Label label, std::size_t n) {
    TriaxialRecording rec;
    const std::size_t subject = index % std::max<std::size_t>(1, spec_.subjects);
    rec.id = fmt::format("{}_{:04d}_s{:02d}", kind, index, subject);
    rec.sample_rate_hz = spec_.sample_rate_hz;
    rec.meta.dataset = spec_.dataset;
    rec.meta.subject = fmt::format("s{:02d}", subject);
    rec.meta.device = spec_.device;
    rec.meta.activity = kind;
    rec.meta.unit = "g";
    rec.meta.label = label;
    rec.samples.reserve(n);
    return rec;
  }

  void push(TriaxialRecording& rec, TriaxialSample s) {
    const double sigma = 0.03 * spec_.noise_scale;
    s.x = to_float_precision(spec_.gain * (s.x + sigma * normal_(rng_)));
    s.y = to_float_precision(spec_.gain * (s.y + sigma * normal_(rng_)));
    s.z = to_float_precision(spec_.gain * (s.z + sigma * normal_(rng_)));
    rec.samples.push_back(s);
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  }

  const SyntheticSpec& spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

std::string SyntheticSpec::to_string() const {
  return fmt::format(
      "seed={},falls={},adls={},subjects={},rate={},adl_length={},fall_length={},noise={},gain={},"
      "jumps={},device={},dataset={}",
      seed, falls, adls, subjects, sample_rate_hz, adl_length, fall_length, noise_scale, gain,
      jump_fraction, device, dataset);
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::Parameter, fmt::format("synthetic spec: expected key=value, got '{}'", item));
    }
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "falls") spec.falls = parse_number<std::size_t>(key, value);
    else if (key == "adls") spec.adls = parse_number<std::size_t>(key, value);
    else if (key == "subjects") spec.subjects = parse_number<std::size_t>(key, value);
    else if (key == "rate") spec.sample_rate_hz = parse_number<double>(key, value);
    else if (key == "adl_length") spec.adl_length = parse_number<std::size_t>(key, value);
    else if (key == "fall_length") spec.fall_length = parse_number<std::size_t>(key, value);
    else if (key == "noise") spec.noise_scale = parse_number<double>(key, value);
    else if (key == "gain") spec.gain = parse_number<double>(key, value);
    else if (key == "jumps") spec.jump_fraction = parse_number<double>(key, value);
    else if (key == "device") spec.device = std::string(value);
    else if (key == "dataset") spec.dataset = std::string(value);
    else throw Error(Errc::Parameter, fmt::format("synthetic spec: unknown key '{}'", key));
  }
  if (spec.sample_rate_hz <= 0) throw Error(Errc::Parameter, "synthetic spec: rate must be positive");
  if (spec.adl_length < 2 || spec.fall_length < 8) {
    throw Error(Errc::Parameter, "synthetic spec: recordings too short");
  }
  return spec;
}

std::vector<TriaxialRecording> generate_synthetic(const SyntheticSpec& spec) {
  Generator gen(spec);
  std::vector<TriaxialRecording> out;
  out.reserve(spec.falls + spec.adls);
  for (std::size_t i = 0; i < spec.falls; ++i) out.push_back(gen.fall(i));
  for (std::size_t i = 0; i < spec.adls; ++i) out.push_back(gen.adl(i));
  return out;
}

}  // namespace fallcloud
