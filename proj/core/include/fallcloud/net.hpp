#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "fallcloud/bytes.hpp"
#include "fallcloud/wire.hpp"

namespace fallcloud::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
};

/// "host:port" or ":port". Throws Errc::Parameter.
Endpoint parse_endpoint(std::string_view text);

/// Owning TCP socket handle.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  static Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  static Socket listen(const Endpoint& ep, int backlog = 256);

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close() noexcept;
  /// Shuts down both directions without releasing the descriptor.
  void shutdown() noexcept;

  std::uint16_t local_port() const;
  void set_receive_timeout(std::chrono::milliseconds timeout);

  /// Throws Errc::Io on failure.
  void send_all(std::span<const std::uint8_t> data);
  /// Returns 0 on orderly close; throws Errc::Io on error or timeout.
  std::size_t receive_some(std::span<std::uint8_t> buffer);

 private:
  int fd_ = -1;
};

/// Buffered frame reader over a socket.
class FrameReader {
 public:
  explicit FrameReader(std::size_t max_payload = wire::kDefaultMaxPayload) : max_payload_(max_payload) {}

  /// Blocks until a frame arrives. Throws Errc::Io when the peer closes and
  /// a decode error code for corrupt input.
  wire::Frame read(Socket& socket);

 private:
  Bytes buffer_;
  std::size_t max_payload_;
};

void send_frame(Socket& socket, const wire::Frame& frame);

}  // namespace fallcloud::net
