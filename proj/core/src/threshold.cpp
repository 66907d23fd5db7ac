#include "fallcloud/threshold.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "fallcloud/error.hpp"

namespace fallcloud {

Threshold fit_threshold_from_peaks(std::span<const double> fall_peaks, double safety_factor) {
  if (!(safety_factor > 0.0 && safety_factor <= 1.0)) {
    throw Error(Errc::Parameter, fmt::format("safety_factor {} outside (0, 1]", safety_factor));
  }
  if (fall_peaks.empty()) throw Error(Errc::CannotFit, "no FALL windows to fit a threshold on");
  double min_peak = std::numeric_limits<double>::infinity();
  for (double p : fall_peaks) {
    if (!std::isfinite(p) || p < 0.0) throw Error(Errc::InvalidSample, "peak RMS must be finite and >= 0");
    min_peak = std::min(min_peak, p);
  }
  Threshold th;
  th.safety_factor = safety_factor;
  // s * p <= p for s <= 1 in IEEE arithmetic, so every fall still passes.
  th.tau = safety_factor * min_peak;
  th.fall_count = fall_peaks.size();
  return th;
}

Threshold fit_threshold(std::span<const Window> windows, double safety_factor) {
  std::vector<double> peaks;
  std::set<std::string> datasets;
  for (const auto& w : windows) {
    if (w.label != Label::Fall || w.samples.empty()) continue;
    peaks.push_back(peak_rms(w.samples));
    datasets.insert(w.dataset);
  }
  Threshold th = fit_threshold_from_peaks(peaks, safety_factor);
  th.datasets.assign(datasets.begin(), datasets.end());
  return th;
}

GateDecision gate(const TriaxialSample& sample, const Threshold& th) {
  return rms(sample) < th.tau ? GateDecision::StayMobile : GateDecision::Escalate;
}

GateStreamResult gate_stream(const TriaxialRecording& recording, const Threshold& th,
                             std::size_t window_size, std::size_t lookback) {
  if (window_size == 0) throw Error(Errc::Parameter, "window_size must be positive");
  if (lookback >= window_size) throw Error(Errc::Parameter, "lookback must be below window_size");
  GateStreamResult result;
  const auto& samples = recording.samples;
  const std::size_t n = samples.size();
  std::size_t i = 0;
  while (i < n) {
    if (gate(samples[i], th) == GateDecision::StayMobile) {
      ++i;
      continue;
    }
    const std::size_t horizon = std::min(n, i + window_size - lookback);
    std::size_t peak = i;
    double peak_value = rms(samples[i]);
    for (std::size_t j = i + 1; j < horizon; ++j) {
      const double v = rms(samples[j]);
      if (v > peak_value) {
        peak_value = v;
        peak = j;
      }
    }
    const std::size_t start = peak >= lookback ? peak - lookback : 0;
    if (start + window_size > n) {
      result.partial_triggers.push_back(i);
    } else {
      GateEvent ev;
      ev.trigger_index = i;
      ev.peak_index = peak;
      ev.window.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(start),
                               samples.begin() + static_cast<std::ptrdiff_t>(start + window_size));
      ev.window.label = recording.meta.label;
      ev.window.recording_id = recording.id;
      ev.window.start = start;
      ev.window.subject = recording.meta.subject;
      ev.window.dataset = recording.meta.dataset;
      result.events.push_back(std::move(ev));
    }
    i += window_size;
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double_field(const std::string& key, const std::string& text) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::Corrupt, fmt::format("threshold file: bad value for '{}'", key));
  }
  return v;
}

}  // namespace

void write_threshold(std::ostream& out, const Threshold& th) {
  out << "# fallcloud threshold\n";
  out << "version=1\n";
  out << "tau=" << format_double(th.tau) << "\n";
  out << "safety_factor=" << format_double(th.safety_factor) << "\n";
  out << "fall_count=" << th.fall_count << "\n";
  out << "datasets=";
  for (std::size_t i = 0; i < th.datasets.size(); ++i) out << (i ? ";" : "") << th.datasets[i];
  out << "\n";
}

Threshold read_threshold(std::istream& in) {
  Threshold th;
  bool have_tau = false, have_version = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::Corrupt, "threshold file: expected key=value");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "version") {
      if (value != "1") throw Error(Errc::VersionMismatch, "threshold file version " + value);
      have_version = true;
    } else if (key == "tau") {
      th.tau = parse_double_field(key, value);
      have_tau = true;
    } else if (key == "safety_factor") {
      th.safety_factor = parse_double_field(key, value);
    } else if (key == "fall_count") {
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), th.fall_count);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(Errc::Corrupt, "threshold file: bad value for 'fall_count'");
      }
    } else if (key == "datasets") {
      th.datasets.clear();
      std::size_t pos = 0;
      while (pos < value.size()) {
        const auto next = value.find(';', pos);
        th.datasets.push_back(value.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
      }
    }
  }
  if (!have_version || !have_tau) throw Error(Errc::Corrupt, "threshold file missing version or tau");
  if (!(th.tau >= 0.0) || !std::isfinite(th.tau)) throw Error(Errc::Corrupt, "threshold tau must be finite and >= 0");
  return th;
}

}  // namespace fallcloud
