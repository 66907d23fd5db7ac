#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fallcloud/bytes.hpp"
#include "fallcloud/signal.hpp"

namespace fallcloud {

/// Windows file: magic "FCWINDOW", u32 version, u64 body length, body,
/// CRC-32 of the body; big-endian. The body starts with the DatasetConfig
/// and a free-form provenance line (run configuration and seed), then one
/// record per window: label, recording id, dataset, subject, start index,
/// sample count and x,y,z doubles.
struct WindowSet {
  DatasetConfig config;
  std::string provenance;
  std::vector<Window> windows;

  std::size_t fall_count() const noexcept;
  std::size_t adl_count() const noexcept { return windows.size() - fall_count(); }
};

inline constexpr std::uint32_t kWindowsFormatVersion = 1;

Bytes encode_windows(const WindowSet& set);
/// Same error codes as the model loader.
WindowSet decode_windows(std::span<const std::uint8_t> bytes);

}  // namespace fallcloud
