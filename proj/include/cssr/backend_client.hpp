#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <sys/types.h>

#include "cssr/operators.hpp"
#include "cssr/protocol.hpp"

namespace cssr::backend {

using Clock = std::chrono::steady_clock;

/// Duplex byte stream to a backend. Both calls block until done or the
/// deadline passes; failures throw BackendError.
class ByteChannel {
 public:
  virtual ~ByteChannel() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes, Clock::time_point deadline) = 0;
  virtual void read_exact(std::span<std::uint8_t> bytes, Clock::time_point deadline) = 0;
  /// Extra context for error messages (e.g. child exit status).
  virtual std::string diagnostics() { return {}; }
};

/// Runs `command` through /bin/sh -c with its stdin/stdout piped to us.
/// stderr is inherited. Closing the channel closes the child's stdin and
/// reaps it, killing it if it lingers.
class ChildProcessChannel : public ByteChannel {
 public:
  explicit ChildProcessChannel(const std::string& command);
  ~ChildProcessChannel() override;

  ChildProcessChannel(const ChildProcessChannel&) = delete;
  ChildProcessChannel& operator=(const ChildProcessChannel&) = delete;

  void write_all(std::span<const std::uint8_t> bytes, Clock::time_point deadline) override;
  void read_exact(std::span<std::uint8_t> bytes, Clock::time_point deadline) override;
  std::string diagnostics() override;

  pid_t pid() const noexcept { return pid_; }

 private:
  void reap(std::chrono::milliseconds grace);

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::optional<int> wait_status_;
};

struct Timeouts {
  std::chrono::milliseconds handshake{10'000};
  std::chrono::milliseconds request{120'000};
};

/// Client side of the protocol state machine: one HELLO/CAPS exchange, then
/// strictly alternating request/response. Any transport or framing failure
/// leaves the session broken; an ERROR reply does not.
class Session {
 public:
  explicit Session(std::unique_ptr<ByteChannel> channel, Timeouts timeouts = {});

  const protocol::Capabilities& handshake();
  const protocol::Capabilities& capabilities() const;
  bool ready() const noexcept { return caps_.has_value() && !broken_; }

  /// Validated SR request (scale advertised, dims within limits, response
  /// shape checked).
  Image super_resolve(const Image& img, int scale);

  /// Unchecked exchange of one frame for one reply; used by conformance probes.
  protocol::Frame round_trip(const protocol::Frame& request);

 private:
  protocol::Frame exchange(const protocol::Frame& request, std::chrono::milliseconds timeout);
  protocol::Frame receive(Clock::time_point deadline);

  std::unique_ptr<ByteChannel> channel_;
  Timeouts timeouts_;
  std::optional<protocol::Capabilities> caps_;
  bool broken_ = false;
  std::atomic<bool> in_flight_{false};
};

/// Same as Session::super_resolve.
Image sr_via_backend(const Image& img, int scale, Session& session);

/// SR unit backed by a spawned process.
class BackendClient : public SrBackend {
 public:
  /// Spawns `command` and completes the handshake.
  static std::shared_ptr<BackendClient> launch(const std::string& command, Timeouts timeouts = {});

  explicit BackendClient(std::unique_ptr<Session> session) : session_(std::move(session)) {}

  Image upscale(const Image& img, int scale) override;
  Session& session() noexcept { return *session_; }

 private:
  std::unique_ptr<Session> session_;
};

}  // namespace cssr::backend
