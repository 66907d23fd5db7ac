#include "fallcloud/service.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <spdlog/spdlog.h>

namespace fallcloud::service {

using Clock = std::chrono::steady_clock;

CloudService::CloudService(fedt::FedtModel model, features::FeatureRegistry registry, ServiceLimits limits)
    : model_(std::move(model)), registry_(std::move(registry)), limits_(limits) {
  if (model_.fingerprint != registry_.fingerprint()) {
    throw Error(Errc::Incompatible, fmt::format("model registry {} differs from service registry {}",
                                                features::fingerprint_hex(model_.fingerprint),
                                                features::fingerprint_hex(registry_.fingerprint())));
  }
  if (model_.feature_count != registry_.arity()) {
    throw Error(Errc::Incompatible, "model arity differs from registry arity");
  }
  model_.validate();
}

CloudService::~CloudService() { stop(); }

void CloudService::start(const net::Endpoint& listen_on) {
  listener_ = net::Socket::listen(listen_on);
  port_ = listener_.local_port();
  stopping_ = false;
  {
    std::lock_guard lock(stop_mutex_);
    stopped_ = false;
  }
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("cloud service listening on {}:{} (model {}, registry {})", listen_on.host, port_,
               model_.model_id, features::fingerprint_hex(registry_.fingerprint()));
}

void CloudService::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  std::list<std::unique_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto& s : sessions_) s->socket.shutdown();
    sessions.swap(sessions_);
  }
  sessions.clear();  // joins session threads
  {
    std::lock_guard lock(stop_mutex_);
    stopped_ = true;
  }
  stopped_cv_.notify_all();
}

void CloudService::wait() {
  std::unique_lock lock(stop_mutex_);
  stopped_cv_.wait(lock, [this] { return stopped_; });
}

ServiceStats CloudService::stats() const noexcept {
  return {accepted_.load(), rejected_.load(), served_.load(), errors_.load(), active_.load()};
}

wire::VerdictPayload CloudService::infer(const wire::WindowPayload& window) const {
  const auto start = Clock::now();
  const auto samples = wire::to_samples(window);
  const auto fv = features::extract_features(samples, registry_, 1);
  const auto verdict = fedt::classify(model_, fv);
  wire::VerdictPayload out;
  out.window_id = window.window_id;
  out.label = verdict.label;
  out.probability = verdict.probability;
  out.latency_us = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
  return out;
}

void CloudService::reap_finished() {
  std::lock_guard lock(sessions_mutex_);
  sessions_.remove_if([](const std::unique_ptr<Session>& s) { return s->done.load(); });
}

void CloudService::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    reap_finished();
    if (ready <= 0 || !(pfd.revents & POLLIN)) continue;
    net::Socket client(::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!client.valid()) continue;

    if (active_.load() >= limits_.max_sessions) {
      ++rejected_;
      try {
        net::send_frame(client, wire::to_frame(wire::ErrorPayload{wire::ErrorCode::SessionLimit, "session limit reached"}));
        ++errors_;
      } catch (const Error&) {
      }
      continue;
    }
    ++accepted_;
    ++active_;
    auto session = std::make_unique<Session>();
    session->socket = std::move(client);
    session->socket.set_receive_timeout(limits_.idle_timeout);
    Session* raw = session.get();
    {
      std::lock_guard lock(sessions_mutex_);
      sessions_.push_back(std::move(session));
    }
    raw->thread = std::jthread([this, raw] {
      run_session(*raw);
      raw->socket.shutdown();
      --active_;
      raw->done = true;
    });
  }
}

namespace {

wire::ErrorCode error_code_for(Errc e) {
  switch (e) {
    case Errc::ChecksumMismatch: return wire::ErrorCode::Checksum;
    case Errc::VersionMismatch: return wire::ErrorCode::Version;
    default: return wire::ErrorCode::BadFrame;
  }
}

}  // namespace

void CloudService::run_session(Session& session) {
  net::FrameReader reader(limits_.max_payload);
  auto reply_error = [&](wire::ErrorCode code, const std::string& message) {
    ++errors_;
    spdlog::debug("session error ({}): {}", static_cast<int>(code), message);
    try {
      net::send_frame(session.socket, wire::to_frame(wire::ErrorPayload{code, message}));
    } catch (const Error&) {
    }
  };

  bool greeted = false;
  for (;;) {
    wire::Frame frame;
    try {
      frame = reader.read(session.socket);
    } catch (const Error& e) {
      if (e.code() == Errc::Io) return;  // peer closed or timed out
      if (e.code() == Errc::Protocol && std::string_view(e.what()).find("exceeds limit") != std::string_view::npos) {
        reply_error(wire::ErrorCode::Oversized, e.what());
      } else {
        reply_error(error_code_for(e.code()), e.what());
      }
      return;
    }

    try {
      if (!greeted) {
        if (frame.type != wire::MsgType::Hello) {
          reply_error(wire::ErrorCode::UnexpectedMessage, "expected HELLO");
          return;
        }
        const auto hello = wire::parse_hello(frame.payload);
        if (hello.protocol_version != wire::kProtocolVersion) {
          reply_error(wire::ErrorCode::Version, fmt::format("protocol version {}", hello.protocol_version));
          return;
        }
        if (hello.fingerprint != registry_.fingerprint()) {
          reply_error(wire::ErrorCode::FingerprintMismatch,
                      fmt::format("client registry {} but service serves {}", features::fingerprint_hex(hello.fingerprint),
                                  features::fingerprint_hex(registry_.fingerprint())));
          return;
        }
        net::send_frame(session.socket, wire::to_frame(wire::HelloPayload{wire::kProtocolVersion, registry_.fingerprint(),
                                                                          model_.model_id}));
        greeted = true;
        continue;
      }
      if (frame.type != wire::MsgType::Window) {
        reply_error(wire::ErrorCode::UnexpectedMessage, "expected WINDOW");
        return;
      }
      const auto window = wire::parse_window(frame.payload);
      if (window.samples.empty()) {
        reply_error(wire::ErrorCode::BadFrame, "WINDOW without samples");
        return;
      }
      const auto verdict = infer(window);
      ++served_;
      net::send_frame(session.socket, wire::to_frame(verdict));
    } catch (const Error& e) {
      if (e.code() == Errc::Io) return;
      reply_error(e.code() == Errc::Protocol ? wire::ErrorCode::BadFrame : wire::ErrorCode::Internal, e.what());
      return;
    }
  }
}

}  // namespace fallcloud::service
