#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fallcloud/signal.hpp"

namespace fallcloud {

struct IngestOptions {
  char delimiter = ',';
  /// 0 selects the adapter's default rate.
  double sample_rate_hz = 0.0;
  /// Overrides filename-based fall/ADL inference.
  std::optional<Label> label;
  /// Dataset id stamped into metadata; empty selects the adapter id.
  std::string dataset;
  std::string device;
  /// Unit label for adapters that cannot know it (generic); metadata only.
  std::string unit = "g";
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
};

/// Adapter ids accepted by ingest(): generic, sisfall, mobiact, mmsys, synthetic.
std::vector<std::string> adapter_ids();

/// Reads one file or every regular file under a directory (sorted by path,
/// parsed in parallel, returned in path order). For the "synthetic" adapter
/// `source` is a generator spec string instead of a path.
///
/// Errors: Errc::UnknownAdapter, Errc::Ingest (names file and line).
std::vector<TriaxialRecording> ingest(const std::string& source, std::string_view adapter,
                                      const IngestOptions& options = {});

/// Writes a recording in the generic delimited layout (header x,y,z) using
/// shortest round-trip formatting, so ingest() reproduces it bit-for-bit.
void write_generic(std::ostream& out, const TriaxialRecording& recording, char delimiter = ',');

}  // namespace fallcloud
