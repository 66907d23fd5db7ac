#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fallcloud {

/// One tri-axial accelerometer reading in the recording's native unit.
struct TriaxialSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const TriaxialSample&, const TriaxialSample&) = default;
};

enum class Label : std::uint8_t { Adl = 0, Fall = 1 };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view text);

struct RecordingMeta {
  std::string dataset;
  std::string subject;
  std::string device;
  std::string activity;
  std::string unit = "g";
  Label label = Label::Adl;
};

/// A timestamped stream of samples plus provenance. Units are metadata only
/// and never converted.
struct TriaxialRecording {
  std::string id;
  std::vector<TriaxialSample> samples;
  double sample_rate_hz = 0.0;
  RecordingMeta meta;

  /// Throws Errc::EmptyInput / Errc::Parameter / Errc::InvalidSample.
  void validate() const;
};

/// Fixed-length labeled segment of a recording; the unit of classification.
struct Window {
  std::vector<TriaxialSample> samples;
  Label label = Label::Adl;
  std::string recording_id;
  std::size_t start = 0;
  std::string subject;
  std::string dataset;

  friend bool operator==(const Window&, const Window&) = default;
};

struct DatasetConfig {
  std::size_t window_size = 200;
  std::size_t stride = 100;
  std::string adapter = "generic";

  void validate() const;

  /// Window sizes per dataset; stride defaults to half a window.
  static DatasetConfig sisfall() { return {200, 100, "sisfall"}; }
  static DatasetConfig mmsys() { return {100, 50, "mmsys"}; }
  static DatasetConfig mobiact() { return {600, 300, "mobiact"}; }
  static DatasetConfig practical() { return {300, 150, "generic"}; }
  static DatasetConfig synthetic() { return {100, 50, "synthetic"}; }
  /// Preset by adapter id; unknown ids get the generic 200/100 layout.
  static DatasetConfig for_adapter(std::string_view adapter);
};

/// Euclidean norm of the acceleration vector. Throws Errc::InvalidSample on
/// non-finite components.
double rms(const TriaxialSample& sample);

std::vector<double> rms_series(std::span<const TriaxialSample> samples);
std::vector<double> rms_series(const TriaxialRecording& recording);

/// Index of the first maximum. Precondition: non-empty.
std::size_t first_argmax(std::span<const double> values);

/// Start index of a window of `window_size` samples whose left part holds
/// floor(window_size / 2) samples before `center`, shifted inward so it stays
/// within [0, length).
std::size_t centered_window_start(std::size_t center, std::size_t window_size,
                                  std::size_t length);

/// Peak-centered fall window. Throws Errc::TooShort if the recording is
/// shorter than window_size.
Window segment_fall(const TriaxialRecording& recording, std::size_t window_size);

/// Sliding windows at 0, stride, 2*stride, ... labeled ADL. Returns an empty
/// list (and logs) when the recording is shorter than one window.
std::vector<Window> segment_adl(const TriaxialRecording& recording, const DatasetConfig& cfg);

/// Dispatches on recording.meta.label: one peak window for falls, sliding
/// windows for ADLs. Too-short falls are skipped and logged.
std::vector<Window> segment(const TriaxialRecording& recording, const DatasetConfig& cfg);

std::vector<Window> segment_all(std::span<const TriaxialRecording> recordings,
                                const DatasetConfig& cfg);

/// Peak RMS over a window; what the mobile gate looks at.
double peak_rms(std::span<const TriaxialSample> samples);

}  // namespace fallcloud
