#include "fallcloud/windows_io.hpp"

#include <algorithm>
#include <string_view>

#include <fmt/format.h>

namespace fallcloud {

namespace {
constexpr std::string_view kMagic = "FCWINDOW";
constexpr std::size_t kHeader = 8 + 4 + 8;
}  // namespace

std::size_t WindowSet::fall_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(windows.begin(), windows.end(), [](const Window& w) { return w.label == Label::Fall; }));
}

Bytes encode_windows(const WindowSet& set) {
  Bytes body;
  ByteWriter w(body);
  w.u64(set.config.window_size);
  w.u64(set.config.stride);
  w.str(set.config.adapter);
  w.str(set.provenance);
  w.u64(set.windows.size());
  for (const auto& win : set.windows) {
    w.u8(static_cast<std::uint8_t>(win.label));
    w.str(win.recording_id);
    w.str(win.dataset);
    w.str(win.subject);
    w.u64(win.start);
    w.u32(static_cast<std::uint32_t>(win.samples.size()));
    for (const auto& s : win.samples) {
      w.f64(s.x);
      w.f64(s.y);
      w.f64(s.z);
    }
  }
  Bytes out;
  ByteWriter head(out);
  head.raw(kMagic);
  head.u32(kWindowsFormatVersion);
  head.u64(body.size());
  head.raw(body);
  head.u32(crc32(body));
  return out;
}

WindowSet decode_windows(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size()) throw Error(Errc::Truncated, "windows file shorter than its magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw Error(Errc::BadMagic, "not a windows file");
  if (bytes.size() < kHeader) throw Error(Errc::Truncated, "windows header incomplete");
  ByteReader head(bytes.subspan(kMagic.size()));
  const auto version = head.u32();
  if (version != kWindowsFormatVersion) {
    throw Error(Errc::VersionMismatch, fmt::format("windows format version {}", version));
  }
  const auto len = head.u64();
  if (bytes.size() - kHeader < len || bytes.size() - kHeader - len < 4) {
    throw Error(Errc::Truncated, "windows body incomplete");
  }
  if (bytes.size() - kHeader - len > 4) throw Error(Errc::Corrupt, "trailing bytes after windows checksum");
  const auto body = bytes.subspan(kHeader, len);
  ByteReader tail(bytes.subspan(kHeader + len));
  if (tail.u32() != crc32(body)) throw Error(Errc::ChecksumMismatch, "windows checksum does not match");

  WindowSet set;
  try {
    ByteReader r(body);
    set.config.window_size = r.u64();
    set.config.stride = r.u64();
    set.config.adapter = r.str();
    set.provenance = r.str();
    const auto count = r.u64();
    if (count > r.remaining()) throw Error(Errc::Corrupt, "window count exceeds body size");
    set.windows.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      Window win;
      const auto label = r.u8();
      if (label > 1) throw Error(Errc::Corrupt, "bad window label");
      win.label = static_cast<Label>(label);
      win.recording_id = r.str();
      win.dataset = r.str();
      win.subject = r.str();
      win.start = r.u64();
      const auto n = r.u32();
      if (static_cast<std::uint64_t>(n) * 24 > r.remaining()) throw Error(Errc::Corrupt, "sample count exceeds body");
      win.samples.resize(n);
      for (auto& s : win.samples) {
        s.x = r.f64();
        s.y = r.f64();
        s.z = r.f64();
      }
      set.windows.push_back(std::move(win));
    }
    if (r.remaining() != 0) throw Error(Errc::Corrupt, "unparsed bytes in windows body");
  } catch (const Error& e) {
    if (e.code() == Errc::Corrupt) throw;
    throw Error(Errc::Corrupt, e.what());
  }
  return set;
}

}  // namespace fallcloud
