#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fallcloud/signal.hpp"

namespace fallcloud {

/// Parameters of the seeded recording generator: falls are a free-fall dip,
/// a sustained multi-g impact and a posture change; ADLs are gait-like
/// oscillation around gravity, a fraction of them with short jump landings
/// that cross a fall-fitted gate threshold.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t falls = 200;
  std::size_t adls = 120;
  std::size_t subjects = 10;
  double sample_rate_hz = 50.0;
  std::size_t adl_length = 1000;
  std::size_t fall_length = 400;
  /// Multiplies sensor noise and gait amplitude; > 1 emulates another device.
  double noise_scale = 1.0;
  /// Gain applied to every axis, emulating a different sensor calibration.
  double gain = 1.0;
  double jump_fraction = 0.25;
  std::string device = "synthetic-a";
  std::string dataset = "synthetic";

  /// Canonical "key=value,..." form accepted by parse_synthetic_spec().
  std::string to_string() const;
};

/// Parses "falls=10,adls=10,seed=3,..." with unset keys at their defaults.
SyntheticSpec parse_synthetic_spec(std::string_view text);

/// Deterministic for a given spec. Sample values are rounded to float
/// precision so they survive the 32-bit wire encoding unchanged.
std::vector<TriaxialRecording> generate_synthetic(const SyntheticSpec& spec);

}  // namespace fallcloud
