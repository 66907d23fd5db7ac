#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "fallcloud/features.hpp"
#include "fallcloud/fedt.hpp"
#include "fallcloud/net.hpp"

namespace fallcloud::service {

struct ServiceLimits {
  std::size_t max_payload = wire::kDefaultMaxPayload;
  std::size_t max_sessions = 256;
  std::chrono::milliseconds idle_timeout{30000};
};

struct ServiceStats {
  std::uint64_t sessions_accepted = 0;
  std::uint64_t sessions_rejected = 0;
  std::uint64_t windows_served = 0;
  std::uint64_t errors_sent = 0;
  std::uint64_t active_sessions = 0;
};

/// Cloud inference service: per connection a HELLO handshake, then one
/// VERDICT per WINDOW in arrival order. Any malformed frame gets an ERROR
/// reply and the connection is closed; the service keeps running.
class CloudService {
 public:
  /// Throws Errc::Incompatible when the model was not trained on `registry`.
  CloudService(fedt::FedtModel model, features::FeatureRegistry registry, ServiceLimits limits = {});
  ~CloudService();
  CloudService(const CloudService&) = delete;
  CloudService& operator=(const CloudService&) = delete;

  /// Binds and starts accepting on a background thread. Port 0 picks a free port.
  void start(const net::Endpoint& listen_on);
  /// Stops accepting, closes every session and joins all threads.
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t port() const noexcept { return port_; }
  ServiceStats stats() const noexcept;
  const fedt::FedtModel& model() const noexcept { return model_; }

  /// In-process path used by sessions: extract features and classify.
  wire::VerdictPayload infer(const wire::WindowPayload& window) const;

 private:
  struct Session {
    net::Socket socket;
    std::jthread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void run_session(Session& session);
  void reap_finished();

  fedt::FedtModel model_;
  features::FeatureRegistry registry_;
  ServiceLimits limits_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;

  std::atomic<std::uint64_t> accepted_{0}, rejected_{0}, served_{0}, errors_{0}, active_{0};
  std::mutex stop_mutex_;
  std::condition_variable stopped_cv_;
  bool stopped_ = true;
};

}  // namespace fallcloud::service
