#include "fallcloud/signal.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "fallcloud/error.hpp"

namespace fallcloud {

std::string_view to_string(Label label) noexcept {
  return label == Label::Fall ? "FALL" : "ADL";
}

Label parse_label(std::string_view text) {
  if (text == "FALL" || text == "fall" || text == "1") return Label::Fall;
  if (text == "ADL" || text == "adl" || text == "0") return Label::Adl;
  throw Error(Errc::Parameter, "unknown label '" + std::string(text) + "'");
}

void TriaxialRecording::validate() const {
  if (samples.empty()) throw Error(Errc::EmptyInput, "recording '" + id + "' has no samples");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw Error(Errc::Parameter, "recording '" + id + "' needs a positive sample rate");
  }
  for (const auto& s : samples) (void)rms(s);
}

void DatasetConfig::validate() const {
  if (window_size == 0) throw Error(Errc::Parameter, "window_size must be positive");
  if (stride == 0 || stride > window_size) {
    throw Error(Errc::Parameter, "stride must satisfy 0 < stride <= window_size");
  }
}

DatasetConfig DatasetConfig::for_adapter(std::string_view adapter) {
  if (adapter == "sisfall") return sisfall();
  if (adapter == "mmsys") return mmsys();
  if (adapter == "mobiact") return mobiact();
  if (adapter == "practical") return practical();
  if (adapter == "synthetic") return synthetic();
  return {200, 100, std::string(adapter)};
}

double rms(const TriaxialSample& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
    throw Error(Errc::InvalidSample, "non-finite acceleration component");
  }
  return std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
}

std::vector<double> rms_series(std::span<const TriaxialSample> samples) {
  if (samples.empty()) throw Error(Errc::EmptyInput, "rms_series of an empty sequence");
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(rms(s));
  return out;
}

std::vector<double> rms_series(const TriaxialRecording& recording) {
  return rms_series(std::span<const TriaxialSample>(recording.samples));
}

std::size_t first_argmax(std::span<const double> values) {
  // max_element returns the first of equal maxima.
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::size_t centered_window_start(std::size_t center, std::size_t window_size,
                                  std::size_t length) {
  const std::size_t left = window_size / 2;
  std::size_t start = center >= left ? center - left : 0;
  if (start + window_size > length) start = length - window_size;
  return start;
}

double peak_rms(std::span<const TriaxialSample> samples) {
  double peak = 0.0;
  for (const auto& s : samples) peak = std::max(peak, rms(s));
  return peak;
}

namespace {

Window make_window(const TriaxialRecording& rec, std::size_t start, std::size_t size, Label label) {
  Window w;
  w.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(start),
                   rec.samples.begin() + static_cast<std::ptrdiff_t>(start + size));
  w.label = label;
  w.recording_id = rec.id;
  w.start = start;
  w.subject = rec.meta.subject;
  w.dataset = rec.meta.dataset;
  return w;
}

}  // namespace

Window segment_fall(const TriaxialRecording& recording, std::size_t window_size) {
  if (window_size == 0) throw Error(Errc::Parameter, "window_size must be positive");
  if (recording.samples.size() < window_size) {
    throw Error(Errc::TooShort, "recording '" + recording.id + "' has " +
                                    std::to_string(recording.samples.size()) +
                                    " samples, window needs " + std::to_string(window_size));
  }
  const auto series = rms_series(recording);
  const std::size_t peak = first_argmax(series);
  const std::size_t start = centered_window_start(peak, window_size, series.size());
  return make_window(recording, start, window_size, Label::Fall);
}

std::vector<Window> segment_adl(const TriaxialRecording& recording, const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<Window> out;
  const std::size_t n = recording.samples.size();
  if (n < cfg.window_size) {
    spdlog::debug("recording '{}' shorter than one window ({} < {}), skipped", recording.id, n,
                  cfg.window_size);
    return out;
  }
  out.reserve((n - cfg.window_size) / cfg.stride + 1);
  for (std::size_t start = 0; start + cfg.window_size <= n; start += cfg.stride) {
    out.push_back(make_window(recording, start, cfg.window_size, Label::Adl));
  }
  return out;
}

std::vector<Window> segment(const TriaxialRecording& recording, const DatasetConfig& cfg) {
  if (recording.meta.label == Label::Adl) return segment_adl(recording, cfg);
  try {
    return {segment_fall(recording, cfg.window_size)};
  } catch (const Error& e) {
    if (e.code() != Errc::TooShort) throw;
    spdlog::warn("{}", e.what());
    return {};
  }
}

std::vector<Window> segment_all(std::span<const TriaxialRecording> recordings,
                                const DatasetConfig& cfg) {
  std::vector<Window> out;
  for (const auto& rec : recordings) {
    auto windows = segment(rec, cfg);
    std::move(windows.begin(), windows.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace fallcloud
