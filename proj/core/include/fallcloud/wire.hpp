#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fallcloud/bytes.hpp"
#include "fallcloud/error.hpp"
#include "fallcloud/signal.hpp"

/// Edge/cloud framing. Every frame is
///
///   "FEDT" | version u8 (=1) | type u8 | payload length u32 | payload | CRC-32(payload) u32
///
/// with all integers and floats big-endian.
namespace fallcloud::wire {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::size_t kDefaultMaxPayload = 4u << 20;

enum class MsgType : std::uint8_t { Window = 0x01, Verdict = 0x02, Hello = 0x03, Error = 0x04 };

bool is_known(std::uint8_t type) noexcept;

struct Frame {
  MsgType type = MsgType::Window;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

Bytes encode_frame(const Frame& frame);

enum class DecodeStatus { Ok, NeedMore, Corrupt };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  Frame frame;
  /// Bytes of input the frame occupied (Ok only).
  std::size_t consumed = 0;
  /// Set for Corrupt: BadMagic, VersionMismatch, ChecksumMismatch, Protocol.
  Errc error = Errc::Corrupt;
  std::string message;
};

/// Decodes the first frame in `bytes`. NeedMore means the prefix is valid so
/// far; Corrupt is reported as soon as the available bytes prove it.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes, std::size_t max_payload = kDefaultMaxPayload);

struct WireSample {
  float x = 0.f, y = 0.f, z = 0.f;
  friend bool operator==(const WireSample&, const WireSample&) = default;
};

/// id u64 | count u32 | count * (x, y, z) f32
struct WindowPayload {
  std::uint64_t window_id = 0;
  std::vector<WireSample> samples;

  friend bool operator==(const WindowPayload&, const WindowPayload&) = default;
};

/// id u64 | label u8 | probability f64 | latency_us u64
struct VerdictPayload {
  std::uint64_t window_id = 0;
  Label label = Label::Adl;
  double probability = 0.0;
  std::uint64_t latency_us = 0;

  friend bool operator==(const VerdictPayload&, const VerdictPayload&) = default;
};

/// version u8 | fingerprint u64 | model id (u16 length + UTF-8)
struct HelloPayload {
  std::uint8_t protocol_version = kProtocolVersion;
  std::uint64_t fingerprint = 0;
  std::string model_id;

  friend bool operator==(const HelloPayload&, const HelloPayload&) = default;
};

enum class ErrorCode : std::uint16_t {
  BadFrame = 1,
  Checksum = 2,
  Version = 3,
  FingerprintMismatch = 4,
  Oversized = 5,
  UnexpectedMessage = 6,
  SessionLimit = 7,
  Internal = 8,
};

/// code u16 | message (u16 length + UTF-8)
struct ErrorPayload {
  ErrorCode code = ErrorCode::BadFrame;
  std::string message;

  friend bool operator==(const ErrorPayload&, const ErrorPayload&) = default;
};

Frame to_frame(const WindowPayload& p);
Frame to_frame(const VerdictPayload& p);
Frame to_frame(const HelloPayload& p);
Frame to_frame(const ErrorPayload& p);

// Strict parsers: the payload must have exactly the declared layout.
// Throw Errc::Protocol on any mismatch.
WindowPayload parse_window(std::span<const std::uint8_t> payload);
VerdictPayload parse_verdict(std::span<const std::uint8_t> payload);
HelloPayload parse_hello(std::span<const std::uint8_t> payload);
ErrorPayload parse_error(std::span<const std::uint8_t> payload);

WindowPayload make_window_payload(std::uint64_t id, std::span<const TriaxialSample> samples);
std::vector<TriaxialSample> to_samples(const WindowPayload& payload);

/// The window as the cloud sees it after 32-bit float transport.
Window quantize(const Window& window);

}  // namespace fallcloud::wire
