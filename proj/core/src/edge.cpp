#include "fallcloud/edge.hpp"

#include <deque>
#include <thread>

#include <spdlog/spdlog.h>

namespace fallcloud::edge {

using Clock = std::chrono::steady_clock;

CloudClient::CloudClient(const net::Endpoint& service, std::uint64_t fingerprint, std::chrono::milliseconds timeout)
    : socket_(net::Socket::connect(service, timeout)) {
  socket_.set_receive_timeout(timeout);
  net::send_frame(socket_, wire::to_frame(wire::HelloPayload{wire::kProtocolVersion, fingerprint, {}}));
  const auto reply = reader_.read(socket_);
  if (reply.type == wire::MsgType::Error) {
    const auto err = wire::parse_error(reply.payload);
    throw Error(Errc::Incompatible, fmt::format("service rejected session: {}", err.message));
  }
  if (reply.type != wire::MsgType::Hello) throw Error(Errc::Protocol, "service did not answer HELLO");
  server_hello_ = wire::parse_hello(reply.payload);
}

void CloudClient::send_window(const wire::WindowPayload& window) { net::send_frame(socket_, wire::to_frame(window)); }

wire::VerdictPayload CloudClient::receive_verdict() {
  const auto frame = reader_.read(socket_);
  if (frame.type == wire::MsgType::Error) {
    const auto err = wire::parse_error(frame.payload);
    throw Error(Errc::Protocol, fmt::format("service error {}: {}", static_cast<int>(err.code), err.message));
  }
  if (frame.type != wire::MsgType::Verdict) throw Error(Errc::Protocol, "expected VERDICT");
  return wire::parse_verdict(frame.payload);
}

wire::VerdictPayload CloudClient::classify(const wire::WindowPayload& window) {
  send_window(window);
  return receive_verdict();
}

namespace {

struct Pending {
  std::size_t entry = 0;
  Clock::time_point sent;
};

}  // namespace

SessionLog edge_sim(const TriaxialRecording& recording, const Threshold& threshold, const EdgeConfig& cfg,
                    const net::Endpoint& service) {
  if (cfg.max_in_flight == 0) throw Error(Errc::Parameter, "max_in_flight must be positive");
  SessionLog log;
  log.recording_id = recording.id;

  const auto gated = gate_stream(recording, threshold, cfg.window_size, cfg.lookback);
  log.partial_triggers = gated.partial_triggers;
  if (gated.events.empty()) return log;

  for (std::size_t i = 0; i < gated.events.size(); ++i) {
    SessionEntry e;
    e.trigger_index = gated.events[i].trigger_index;
    e.window_id = i;
    e.window = wire::quantize(gated.events[i].window);
    log.entries.push_back(std::move(e));
  }

  std::optional<CloudClient> client;
  auto connect = [&] {
    client.emplace(service, cfg.fingerprint, cfg.timeout);
    log.model_id = client->server_hello().model_id;
  };

  std::deque<Pending> in_flight;
  std::size_t next = 0;
  bool retried = false;
  const auto replay_start = Clock::now();

  auto drain_one = [&] {
    const auto v = client->receive_verdict();
    const auto p = in_flight.front();
    in_flight.pop_front();
    auto& entry = log.entries[p.entry];
    if (v.window_id != entry.window_id) {
      throw Error(Errc::Protocol, fmt::format("verdict for window {} arrived while {} was expected", v.window_id,
                                              entry.window_id));
    }
    entry.verdict = v;
    entry.delivered = true;
    entry.round_trip = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - p.sent);
  };

  for (;;) {
    try {
      if (!client) connect();
      while (next < log.entries.size()) {
        auto& entry = log.entries[next];
        if (cfg.realtime && recording.sample_rate_hz > 0) {
          // The window is complete once its last sample has been observed.
          const double t = static_cast<double>(entry.window.start + entry.window.samples.size()) /
                           recording.sample_rate_hz;
          std::this_thread::sleep_until(replay_start + std::chrono::duration_cast<Clock::duration>(
                                                           std::chrono::duration<double>(t)));
        }
        while (in_flight.size() >= cfg.max_in_flight) drain_one();
        client->send_window(wire::make_window_payload(entry.window_id, entry.window.samples));
        ++log.frames_sent;
        in_flight.push_back({next, Clock::now()});
        ++next;
      }
      while (!in_flight.empty()) drain_one();
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::Io && e.code() != Errc::Truncated) throw;
      spdlog::warn("connection to {} lost: {}", service.to_string(), e.what());
      client.reset();
      // Unacknowledged windows go back to the buffer, oldest first.
      std::vector<std::size_t> buffered;
      for (const auto& p : in_flight) buffered.push_back(p.entry);
      for (std::size_t i = next; i < log.entries.size(); ++i) buffered.push_back(i);
      in_flight.clear();
      if (retried || buffered.empty()) break;
      retried = true;
      ++log.retries;
      // Beyond the cap windows are dropped and logged as undelivered.
      if (buffered.size() > cfg.buffer_cap) buffered.resize(cfg.buffer_cap);
      try {
        connect();
        for (const auto idx : buffered) {
          while (in_flight.size() >= cfg.max_in_flight) drain_one();
          client->send_window(wire::make_window_payload(log.entries[idx].window_id, log.entries[idx].window.samples));
          ++log.frames_sent;
          in_flight.push_back({idx, Clock::now()});
        }
        while (!in_flight.empty()) drain_one();
      } catch (const Error& e2) {
        if (e2.code() != Errc::Io && e2.code() != Errc::Truncated) throw;
        spdlog::warn("retry to {} failed: {}", service.to_string(), e2.what());
      }
      break;
    }
  }
  for (const auto& entry : log.entries) log.undelivered += entry.delivered ? 0 : 1;
  return log;
}

}  // namespace fallcloud::edge
