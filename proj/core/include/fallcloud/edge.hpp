#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fallcloud/net.hpp"
#include "fallcloud/signal.hpp"
#include "fallcloud/threshold.hpp"
#include "fallcloud/wire.hpp"

namespace fallcloud::edge {

/// Blocking client for one service session.
class CloudClient {
 public:
  /// Connects and performs the HELLO exchange. Throws Errc::Incompatible when
  /// the service answers with ERROR (fingerprint or version rejected).
  CloudClient(const net::Endpoint& service, std::uint64_t fingerprint,
              std::chrono::milliseconds timeout = std::chrono::seconds(10));

  const wire::HelloPayload& server_hello() const noexcept { return server_hello_; }

  void send_window(const wire::WindowPayload& window);
  /// Next VERDICT. An ERROR frame from the service throws Errc::Protocol.
  wire::VerdictPayload receive_verdict();

  /// send_window + receive_verdict.
  wire::VerdictPayload classify(const wire::WindowPayload& window);

  net::Socket& socket() noexcept { return socket_; }

 private:
  net::Socket socket_;
  net::FrameReader reader_;
  wire::HelloPayload server_hello_;
};

struct EdgeConfig {
  std::size_t window_size = 100;
  std::size_t lookback = 50;
  /// Pace replay by the recording's sample rate.
  bool realtime = false;
  std::size_t max_in_flight = 16;
  /// Windows kept for the single retry after a lost connection.
  std::size_t buffer_cap = 64;
  std::uint64_t fingerprint = 0;
  std::chrono::milliseconds timeout{10000};
};

struct SessionEntry {
  std::size_t trigger_index = 0;
  std::uint64_t window_id = 0;
  bool delivered = false;
  std::optional<wire::VerdictPayload> verdict;
  std::chrono::microseconds round_trip{0};
  /// The window exactly as transmitted.
  Window window;
};

struct SessionLog {
  std::string recording_id;
  std::vector<SessionEntry> entries;
  std::vector<std::size_t> partial_triggers;
  std::size_t frames_sent = 0;
  std::size_t undelivered = 0;
  std::size_t retries = 0;
  std::string model_id;
};

/// Replays `recording` through the gate and escalates each event window to
/// the service at `service`.
SessionLog edge_sim(const TriaxialRecording& recording, const Threshold& threshold, const EdgeConfig& cfg,
                    const net::Endpoint& service);

}  // namespace fallcloud::edge
