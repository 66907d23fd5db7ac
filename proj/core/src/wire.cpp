#include "fallcloud/wire.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include <fmt/format.h>

namespace fallcloud::wire {

namespace {
constexpr std::string_view kMagic = "FEDT";

template <typename Fn>
auto strict(std::span<const std::uint8_t> payload, const char* what, Fn&& body) {
  try {
    ByteReader r(payload);
    auto value = body(r);
    if (r.remaining() != 0) throw Error(Errc::Protocol, fmt::format("{} payload has trailing bytes", what));
    return value;
  } catch (const Error& e) {
    if (e.code() == Errc::Protocol) throw;
    throw Error(Errc::Protocol, fmt::format("{} payload malformed: {}", what, e.what()));
  }
}

}  // namespace

bool is_known(std::uint8_t type) noexcept { return type >= 0x01 && type <= 0x04; }

Bytes encode_frame(const Frame& frame) {
  Bytes out;
  out.reserve(kHeaderSize + frame.payload.size() + kTrailerSize);
  ByteWriter w(out);
  w.raw(kMagic);
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(frame.type));
  w.u32(static_cast<std::uint32_t>(frame.payload.size()));
  w.raw(frame.payload);
  w.u32(crc32(frame.payload));
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes, std::size_t max_payload) {
  DecodeResult r;
  auto corrupt = [&](Errc code, std::string msg) {
    r.status = DecodeStatus::Corrupt;
    r.error = code;
    r.message = std::move(msg);
    return r;
  };
  const std::size_t magic_seen = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen), kMagic.begin())) {
    return corrupt(Errc::BadMagic, "frame does not start with FEDT");
  }
  if (bytes.size() > 4 && bytes[4] != kProtocolVersion) {
    return corrupt(Errc::VersionMismatch, fmt::format("protocol version {}", bytes[4]));
  }
  if (bytes.size() > 5 && !is_known(bytes[5])) {
    return corrupt(Errc::Protocol, fmt::format("unknown message type 0x{:02x}", bytes[5]));
  }
  if (bytes.size() < kHeaderSize) return r;
  const std::uint32_t length = (std::uint32_t{bytes[6]} << 24) | (std::uint32_t{bytes[7]} << 16) |
                               (std::uint32_t{bytes[8]} << 8) | std::uint32_t{bytes[9]};
  if (length > max_payload) {
    return corrupt(Errc::Protocol, fmt::format("payload of {} bytes exceeds limit {}", length, max_payload));
  }
  const std::size_t total = kHeaderSize + length + kTrailerSize;
  if (bytes.size() < total) return r;
  const auto payload = bytes.subspan(kHeaderSize, length);
  ByteReader tail(bytes.subspan(kHeaderSize + length, kTrailerSize));
  if (tail.u32() != crc32(payload)) return corrupt(Errc::ChecksumMismatch, "payload CRC-32 mismatch");
  r.status = DecodeStatus::Ok;
  r.frame.type = static_cast<MsgType>(bytes[5]);
  r.frame.payload.assign(payload.begin(), payload.end());
  r.consumed = total;
  return r;
}

Frame to_frame(const WindowPayload& p) {
  Frame f{MsgType::Window, {}};
  f.payload.reserve(12 + 12 * p.samples.size());
  ByteWriter w(f.payload);
  w.u64(p.window_id);
  w.u32(static_cast<std::uint32_t>(p.samples.size()));
  for (const auto& s : p.samples) {
    w.f32(s.x);
    w.f32(s.y);
    w.f32(s.z);
  }
  return f;
}

Frame to_frame(const VerdictPayload& p) {
  Frame f{MsgType::Verdict, {}};
  ByteWriter w(f.payload);
  w.u64(p.window_id);
  w.u8(static_cast<std::uint8_t>(p.label));
  w.f64(p.probability);
  w.u64(p.latency_us);
  return f;
}

Frame to_frame(const HelloPayload& p) {
  if (p.model_id.size() > 0xffff) throw Error(Errc::Parameter, "model id too long");
  Frame f{MsgType::Hello, {}};
  ByteWriter w(f.payload);
  w.u8(p.protocol_version);
  w.u64(p.fingerprint);
  w.u16(static_cast<std::uint16_t>(p.model_id.size()));
  w.raw(p.model_id);
  return f;
}

Frame to_frame(const ErrorPayload& p) {
  Frame f{MsgType::Error, {}};
  ByteWriter w(f.payload);
  w.u16(static_cast<std::uint16_t>(p.code));
  const auto msg = std::string_view(p.message).substr(0, 0xffff);
  w.u16(static_cast<std::uint16_t>(msg.size()));
  w.raw(msg);
  return f;
}

WindowPayload parse_window(std::span<const std::uint8_t> payload) {
  return strict(payload, "WINDOW", [&](ByteReader& r) {
    WindowPayload p;
    p.window_id = r.u64();
    const auto count = r.u32();
    if (payload.size() != 12 + 12 * static_cast<std::uint64_t>(count)) {
      throw Error(Errc::Protocol, fmt::format("WINDOW declares {} samples in {} bytes", count, payload.size()));
    }
    p.samples.resize(count);
    for (auto& s : p.samples) {
      s.x = r.f32();
      s.y = r.f32();
      s.z = r.f32();
      if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
        throw Error(Errc::Protocol, "WINDOW holds a non-finite sample");
      }
    }
    return p;
  });
}

VerdictPayload parse_verdict(std::span<const std::uint8_t> payload) {
  return strict(payload, "VERDICT", [](ByteReader& r) {
    VerdictPayload p;
    p.window_id = r.u64();
    const auto label = r.u8();
    if (label > 1) throw Error(Errc::Protocol, "VERDICT label must be 0 or 1");
    p.label = static_cast<Label>(label);
    p.probability = r.f64();
    if (!(p.probability >= 0.0 && p.probability <= 1.0)) throw Error(Errc::Protocol, "VERDICT probability outside [0, 1]");
    p.latency_us = r.u64();
    return p;
  });
}

HelloPayload parse_hello(std::span<const std::uint8_t> payload) {
  return strict(payload, "HELLO", [](ByteReader& r) {
    HelloPayload p;
    p.protocol_version = r.u8();
    p.fingerprint = r.u64();
    const auto len = r.u16();
    const auto id = r.raw(len);
    p.model_id.assign(id.begin(), id.end());
    return p;
  });
}

ErrorPayload parse_error(std::span<const std::uint8_t> payload) {
  return strict(payload, "ERROR", [](ByteReader& r) {
    ErrorPayload p;
    p.code = static_cast<ErrorCode>(r.u16());
    const auto len = r.u16();
    const auto msg = r.raw(len);
    p.message.assign(msg.begin(), msg.end());
    return p;
  });
}

WindowPayload make_window_payload(std::uint64_t id, std::span<const TriaxialSample> samples) {
  WindowPayload p;
  p.window_id = id;
  p.samples.reserve(samples.size());
  for (const auto& s : samples) {
    p.samples.push_back({static_cast<float>(s.x), static_cast<float>(s.y), static_cast<float>(s.z)});
  }
  return p;
}

std::vector<TriaxialSample> to_samples(const WindowPayload& payload) {
  std::vector<TriaxialSample> out;
  out.reserve(payload.samples.size());
  for (const auto& s : payload.samples) out.push_back({s.x, s.y, s.z});
  return out;
}

Window quantize(const Window& window) {
  // Same conversion as the transport path. An in-place cast loop here was
  // vectorized without the rounding by GCC 11 at -O3.
  Window w = window;
  w.samples = to_samples(make_window_payload(0, window.samples));
  return w;
}

}  // namespace fallcloud::wire
