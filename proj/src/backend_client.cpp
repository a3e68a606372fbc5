#include "cssr/backend_client.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "cssr/error.hpp"

extern char** environ;

namespace cssr::backend {

namespace {

[[noreturn]] void fail(BackendErrorKind kind, const std::string& what) {
  throw BackendError(kind, what);
}

std::string errno_text(const char* call) {
  return std::string(call) + ": " + std::strerror(errno);
}

// Writes to a pipe whose reader died must surface as EPIPE, not kill us.
void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() <= 0 ? 0 : static_cast<int>(std::min<long long>(left.count(), 1 << 30));
}

void wait_ready(int fd, short events, Clock::time_point deadline, const char* what) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;  // readable, writable, or hung up: the next call reports which
    if (rc == 0) fail(BackendErrorKind::Timeout, std::string("timed out ") + what);
    if (errno != EINTR) fail(BackendErrorKind::Broken, errno_text("poll"));
  }
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

// ---- ChildProcessChannel ----------------------------------------------------

ChildProcessChannel::ChildProcessChannel(const std::string& command) {
  ignore_sigpipe();
  int in_pipe[2];   // parent writes -> child stdin
  int out_pipe[2];  // child stdout -> parent reads
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(BackendErrorKind::Broken, errno_text("pipe2"));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail(BackendErrorKind::Broken, errno_text("pipe2"));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  // Own process group, so a shell that forks the real backend can be
  // killed together with it.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr,
                               const_cast<char* const*>(argv), environ);
  posix_spawnattr_destroy(&attr);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    fail(BackendErrorKind::Broken, std::string("posix_spawn: ") + std::strerror(rc));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ChildProcessChannel::~ChildProcessChannel() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  reap(std::chrono::milliseconds(2000));
}

void ChildProcessChannel::reap(std::chrono::milliseconds grace) {
  if (pid_ <= 0 || wait_status_) return;
  const auto deadline = Clock::now() + grace;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      wait_status_ = status;
      ::kill(-pid_, SIGKILL);  // stragglers the shell left behind
      return;
    }
    if (r < 0 && errno != EINTR) return;
    if (Clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(-pid_, SIGKILL);
  if (::waitpid(pid_, &status, 0) == pid_) wait_status_ = status;
}

void ChildProcessChannel::write_all(std::span<const std::uint8_t> bytes,
                                    Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    wait_ready(to_child_, POLLOUT, deadline, "writing to backend");
    const ssize_t n = ::write(to_child_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(BackendErrorKind::Broken, errno_text("write to backend") + diagnostics());
    }
    done += static_cast<std::size_t>(n);
  }
}

void ChildProcessChannel::read_exact(std::span<std::uint8_t> bytes, Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    wait_ready(from_child_, POLLIN, deadline, "waiting for backend reply");
    const ssize_t n = ::read(from_child_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(BackendErrorKind::Broken, errno_text("read from backend") + diagnostics());
    }
    if (n == 0) fail(BackendErrorKind::Broken, "backend closed its output" + diagnostics());
    done += static_cast<std::size_t>(n);
  }
}

std::string ChildProcessChannel::diagnostics() {
  if (!wait_status_ && pid_ > 0) {
    // Give a dying child a moment so the message can say how it ended.
    int status = 0;
    for (int i = 0; i < 20 && !wait_status_; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        wait_status_ = status;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
  }
  if (wait_status_) return " (backend " + describe_status(*wait_status_) + ")";
  return {};
}

// ---- Session ----------------------------------------------------------------

Session::Session(std::unique_ptr<ByteChannel> channel, Timeouts timeouts)
    : channel_(std::move(channel)), timeouts_(timeouts) {}

protocol::Frame Session::receive(Clock::time_point deadline) {
  std::array<std::uint8_t, protocol::kHeaderSize> header{};
  channel_->read_exact(header, deadline);
  const protocol::FrameHeader h = protocol::decode_header(header);
  protocol::Frame frame{h.type, std::vector<std::uint8_t>(h.payload_len)};
  channel_->read_exact(frame.payload, deadline);
  return frame;
}

protocol::Frame Session::exchange(const protocol::Frame& request,
                                  std::chrono::milliseconds timeout) {
  if (broken_) fail(BackendErrorKind::Broken, "backend session is broken");
  if (in_flight_.exchange(true)) {
    throw ContractError("backend handle already has a request in flight");
  }
  struct Release {
    std::atomic<bool>& flag;
    ~Release() { flag = false; }
  } release{in_flight_};

  try {
    const auto deadline = Clock::now() + timeout;
    channel_->write_all(protocol::encode_frame(request), deadline);
    return receive(deadline);
  } catch (const BackendError&) {
    broken_ = true;
    throw;
  }
}

const protocol::Capabilities& Session::handshake() {
  if (caps_) throw ContractError("handshake already completed");
  protocol::Frame reply;
  try {
    reply = exchange({protocol::MessageType::Hello, {}}, timeouts_.handshake);
    if (reply.type == protocol::MessageType::Error) {
      fail(BackendErrorKind::Handshake,
           "backend refused handshake: " + std::string(reply.payload.begin(), reply.payload.end()));
    }
    if (reply.type != protocol::MessageType::Caps) {
      fail(BackendErrorKind::Protocol,
           std::string("expected CAPS, got ") + protocol::to_string(reply.type));
    }
    caps_ = protocol::decode_caps(reply.payload);
  } catch (const BackendError& e) {
    broken_ = true;
    throw BackendError(BackendErrorKind::Handshake, std::string("handshake failed: ") + e.what());
  }
  return *caps_;
}

const protocol::Capabilities& Session::capabilities() const {
  if (!caps_) throw ContractError("handshake not completed");
  return *caps_;
}

protocol::Frame Session::round_trip(const protocol::Frame& request) {
  if (!caps_) throw ContractError("handshake not completed");
  return exchange(request, timeouts_.request);
}

Image Session::super_resolve(const Image& img, int scale) {
  const auto& caps = capabilities();
  if (!caps.supports(scale)) {
    fail(BackendErrorKind::Rejected,
         "scale " + std::to_string(scale) + " is not advertised by the backend");
  }
  if (static_cast<std::uint32_t>(img.width()) > caps.max_width ||
      static_cast<std::uint32_t>(img.height()) > caps.max_height) {
    fail(BackendErrorKind::Rejected, "image " + std::to_string(img.width()) + "x" +
                                         std::to_string(img.height()) +
                                         " exceeds backend limit " +
                                         std::to_string(caps.max_width) + "x" +
                                         std::to_string(caps.max_height));
  }
  const protocol::Frame reply = exchange(
      {protocol::MessageType::SrRequest, protocol::encode_image_payload(img, scale)},
      timeouts_.request);

  if (reply.type == protocol::MessageType::Error) {
    fail(BackendErrorKind::Remote,
         "backend error: " + std::string(reply.payload.begin(), reply.payload.end()));
  }
  try {
    if (reply.type != protocol::MessageType::SrResponse) {
      fail(BackendErrorKind::Protocol,
           std::string("expected SR_RESPONSE, got ") + protocol::to_string(reply.type));
    }
    protocol::ImagePayload out = protocol::decode_image_payload(reply.payload);
    if (out.scale != scale || out.image.channels() != img.channels() ||
        out.image.width() != img.width() * scale || out.image.height() != img.height() * scale) {
      fail(BackendErrorKind::Shape,
           "response is " + std::to_string(out.image.width()) + "x" +
               std::to_string(out.image.height()) + "x" + std::to_string(out.image.channels()) +
               " at scale " + std::to_string(out.scale) + ", expected " +
               std::to_string(img.width() * scale) + "x" + std::to_string(img.height() * scale) +
               "x" + std::to_string(img.channels()) + " at scale " + std::to_string(scale));
    }
    return out.image.retagged(img.color_space());
  } catch (const BackendError&) {
    broken_ = true;
    throw;
  }
}

Image sr_via_backend(const Image& img, int scale, Session& session) {
  return session.super_resolve(img, scale);
}

// ---- BackendClient ----------------------------------------------------------

std::shared_ptr<BackendClient> BackendClient::launch(const std::string& command,
                                                     Timeouts timeouts) {
  auto session =
      std::make_unique<Session>(std::make_unique<ChildProcessChannel>(command), timeouts);
  session->handshake();
  return std::make_shared<BackendClient>(std::move(session));
}

Image BackendClient::upscale(const Image& img, int scale) {
  return session_->super_resolve(img, scale);
}

}  // namespace cssr::backend
