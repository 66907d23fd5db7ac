#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fallcloud/signal.hpp"

namespace fallcloud {

/// Mobile-stage RMS threshold. Immutable once fitted.
struct Threshold {
  double tau = 0.0;
  double safety_factor = 0.9;
  std::vector<std::string> datasets;
  std::size_t fall_count = 0;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

enum class GateDecision { StayMobile, Escalate };

/// tau = safety_factor * min over FALL windows of the window's peak RMS.
/// Non-fall windows in the input are ignored. Throws Errc::CannotFit when no
/// FALL window is present and Errc::Parameter for safety_factor outside (0, 1].
Threshold fit_threshold(std::span<const Window> windows, double safety_factor = 0.9);

/// Same rule over precomputed peak RMS values of FALL windows.
Threshold fit_threshold_from_peaks(std::span<const double> fall_peaks, double safety_factor = 0.9);

/// Escalate iff rms(sample) >= tau.
GateDecision gate(const TriaxialSample& sample, const Threshold& th);

inline bool escalates(const Window& window, const Threshold& th) {
  return peak_rms(window.samples) >= th.tau;
}

struct GateEvent {
  std::size_t trigger_index = 0;
  std::size_t peak_index = 0;
  Window window;
};

struct GateStreamResult {
  std::vector<GateEvent> events;
  /// Trigger indices whose window would run past the end of the stream.
  std::vector<std::size_t> partial_triggers;
};

/// Scans a stream for escalations. On a trigger at i the peak is searched in
/// [i, i + window_size - lookback); the emitted window holds `lookback`
/// samples before that peak (shifted right at the stream start). Triggers are
/// suppressed for window_size samples after each trigger.
GateStreamResult gate_stream(const TriaxialRecording& recording, const Threshold& th,
                             std::size_t window_size, std::size_t lookback);

/// Line-oriented key=value document; doubles use shortest round-trip form.
void write_threshold(std::ostream& out, const Threshold& th);
Threshold read_threshold(std::istream& in);

}  // namespace fallcloud
