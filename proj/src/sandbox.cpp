// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/sandbox.hpp"

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "chartcf/error.hpp"

extern char** environ;

namespace chartcf {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(RenderMode mode) {
  return mode == RenderMode::kParseOnly ? "parse_only" : "render";
}

std::string to_string(RenderStatus status) {
  switch (status) {
    case RenderStatus::kOk: return "ok";
    case RenderStatus::kParseError: return "parse_error";
    case RenderStatus::kRuntimeError: return "runtime_error";
    case RenderStatus::kTimeout: return "timeout";
    case RenderStatus::kNoOutput: return "no_output";
  }
  return "unknown";
}

RenderStatus parse_render_status(const std::string& text) {
  for (auto s : {RenderStatus::kOk, RenderStatus::kParseError,
                 RenderStatus::kRuntimeError, RenderStatus::kTimeout,
                 RenderStatus::kNoOutput}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::kProtocolError, "unknown status '" + text + "'");
}

std::string_view handshake_line() {
  return R"({"hello":"chartcf-worker","version":1})";
}

json encode_request(const RenderRequest& r) {
  return json{{"id", r.request_id},
              {"mode", to_string(r.mode)},
              {"code", r.code},
              {"out_dir", r.output_dir.string()},
              {"timeout_s", r.timeout.count()}};
}

namespace {

// Keeps the final `limit` bytes without starting inside a UTF-8 sequence.
std::string tail_excerpt(const std::string& text, std::size_t limit) {
  if (text.size() <= limit) return text;
  std::size_t start = text.size() - limit;
  while (start < text.size() &&
         (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) {
    ++start;
  }
  return text.substr(start);
}

}  // namespace

RenderResult decode_reply(const std::string& line) {
  RenderResult r;
  try {
    const json j = json::parse(line);
    r.request_id = j.at("id").get<std::string>();
    r.status = parse_render_status(j.at("status").get<std::string>());
    const json& path = j.at("image_path");
    if (!path.is_null()) r.image_path = fs::path(path.get<std::string>());
    r.stderr_excerpt = tail_excerpt(j.value("stderr", ""), kStderrExcerptLimit);
    r.wall_time = j.value("wall_time_s", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("bad reply: ") + e.what());
  }
  return r;
}

WorkerProcess::WorkerProcess(const std::vector<std::string>& argv,
                             std::chrono::duration<double> handshake_timeout) {
  if (argv.empty()) throw Error(ErrorCode::kConfigError, "empty worker command");
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw Error(ErrorCode::kIoError, std::string("socketpair: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(sv[1]);
  fd_ = sv[0];
  if (rc != 0) {
    ::close(fd_);
    fd_ = -1;
    pid_ = -1;
    throw Error(ErrorCode::kWorkerDead,
                "cannot spawn " + argv[0] + ": " + std::strerror(rc));
  }
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(handshake_timeout);
  std::optional<std::string> hello;
  try {
    hello = read_line(deadline);
  } catch (...) {
    kill();
    throw;
  }
  bool valid = false;
  if (hello) {
    try {
      const json j = json::parse(*hello);
      valid = j.value("hello", "") == "chartcf-worker" && j.value("version", 0) == 1;
    } catch (const json::exception&) {
    }
  }
  if (!valid) {
    kill();
    throw Error(ErrorCode::kProtocolError,
                "worker handshake missing or invalid: " + hello.value_or("<timeout>"));
  }
}

WorkerProcess::~WorkerProcess() {
  if (pid_ <= 0) return;
  ::shutdown(fd_, SHUT_WR);
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
      pid_ = -1;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill();
}

void WorkerProcess::kill() {
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<std::string> WorkerProcess::read_line(Clock::time_point deadline) {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) return std::nullopt;
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kWorkerDead, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::kWorkerDead, std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorCode::kWorkerDead, "worker closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::optional<std::string> WorkerProcess::exchange(const std::string& line,
                                                   Clock::time_point deadline) {
  if (fd_ < 0) throw Error(ErrorCode::kWorkerDead, "worker is not running");
  std::string payload = line;
  payload += '\n';
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const ssize_t n = ::send(fd_, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kWorkerDead, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
  return read_line(deadline);
}

WorkerPool::WorkerPool(SandboxOptions options) : options_(std::move(options)) {
  if (options_.worker_command.empty()) {
    throw Error(ErrorCode::kConfigError, "no worker command configured");
  }
  if (options_.pool_size == 0) {
    options_.pool_size = std::max(1u, std::thread::hardware_concurrency());
  }
  if (options_.render_timeout.count() <= 0 || options_.parse_timeout.count() <= 0) {
    throw Error(ErrorCode::kConfigError, "timeouts must be > 0");
  }
  if (options_.scratch_root.empty()) {
    options_.scratch_root =
        fs::temp_directory_path() / ("chartcf-scratch-" + std::to_string(::getpid()));
  }
  fs::create_directories(options_.scratch_root);
  slots_.resize(options_.pool_size);
  leased_.assign(options_.pool_size, false);
}

WorkerPool::~WorkerPool() = default;

WorkerPool::Lease WorkerPool::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    for (std::size_t i = 0; i < leased_.size(); ++i) {
      if (!leased_[i]) {
        leased_[i] = true;
        return Lease(this, i);
      }
    }
    available_.wait(lock);
  }
}

void WorkerPool::release(std::size_t slot) {
  {
    std::lock_guard lock(mutex_);
    leased_[slot] = false;
  }
  available_.notify_one();
}

std::vector<pid_t> WorkerPool::live_pids() const {
  std::lock_guard lock(mutex_);
  std::vector<pid_t> pids;
  for (const auto& w : slots_) {
    if (w && w->pid() > 0) pids.push_back(w->pid());
  }
  return pids;
}

WorkerPool::Lease::Lease(Lease&& other) noexcept
    : pool_(other.pool_), slot_(other.slot_) {
  other.pool_ = nullptr;
}

WorkerPool::Lease::~Lease() {
  if (pool_) pool_->release(slot_);
}

WorkerProcess& WorkerPool::Lease::worker() {
  auto& slot = pool_->slots_[slot_];
  if (!slot || slot->pid() <= 0) {
    auto fresh = std::make_unique<WorkerProcess>(pool_->options_.worker_command,
                                                 pool_->options_.handshake_timeout);
    ++pool_->spawn_count_;
    std::lock_guard lock(pool_->mutex_);
    slot = std::move(fresh);
  }
  return *slot;
}

void WorkerPool::Lease::discard_worker() {
  std::unique_ptr<WorkerProcess> dead;
  {
    std::lock_guard lock(pool_->mutex_);
    dead = std::move(pool_->slots_[slot_]);
  }
  if (dead) dead->kill();
}

RenderSandbox::RenderSandbox(SandboxOptions options) : pool_(std::move(options)) {}

std::string RenderSandbox::next_request_id() {
  return "req-" + std::to_string(::getpid()) + "-" + std::to_string(++counter_);
}

RenderResult RenderSandbox::execute(const RenderRequest& request) {
  if (request.timeout.count() <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "timeout must be > 0");
  }
  auto lease = pool_.acquire();
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(request.timeout +
                                                          pool_.options().kill_grace);
  std::optional<std::string> line;
  try {
    line = lease.worker().exchange(
        encode_request(request).dump(-1, ' ', false, json::error_handler_t::replace),
        deadline);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kWorkerDead) lease.discard_worker();
    throw;
  }
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  if (!line) {
    lease.discard_worker();
    RenderResult timed_out;
    timed_out.request_id = request.request_id;
    timed_out.status = RenderStatus::kTimeout;
    timed_out.stderr_excerpt = "killed after deadline";
    timed_out.wall_time = wall;
    return timed_out;
  }
  RenderResult result;
  try {
    result = decode_reply(*line);
  } catch (...) {
    lease.discard_worker();
    throw;
  }
  if (result.request_id != request.request_id) {
    lease.discard_worker();
    throw Error(ErrorCode::kProtocolError, "reply id '" + result.request_id +
                                               "' does not match '" +
                                               request.request_id + "'");
  }
  if (result.status == RenderStatus::kTimeout) lease.discard_worker();
  return result;
}

RenderResult RenderSandbox::parse_only(const std::string& code) {
  RenderRequest request;
  request.request_id = next_request_id();
  request.mode = RenderMode::kParseOnly;
  request.code = code;
  request.output_dir = pool_.options().scratch_root / request.request_id;
  request.timeout = pool_.options().parse_timeout;
  fs::create_directories(request.output_dir);
  RenderResult result;
  try {
    result = execute(request);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(request.output_dir, ec);
    throw;
  }
  std::error_code ec;
  fs::remove_all(request.output_dir, ec);
  if (result.status != RenderStatus::kOk && result.status != RenderStatus::kTimeout) {
    result.status = RenderStatus::kParseError;
  }
  result.image_path.reset();
  return result;
}

RenderResult RenderSandbox::render(const std::string& code,
                                   const std::string& expected_path_suffix) {
  RenderRequest request;
  request.request_id = next_request_id();
  request.mode = RenderMode::kRender;
  request.code = code;
  request.output_dir = pool_.options().scratch_root / request.request_id;
  request.timeout = pool_.options().render_timeout;
  fs::create_directories(request.output_dir);
  RenderResult result;
  try {
    result = execute(request);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(request.output_dir, ec);
    throw;
  }
  result.scratch_dir = request.output_dir;
  if (result.status == RenderStatus::kOk) {
    std::error_code ec;
    if (!result.image_path || !fs::is_regular_file(*result.image_path, ec) ||
        fs::file_size(*result.image_path, ec) == 0) {
      result.status = RenderStatus::kNoOutput;
    } else {
      const fs::path image = fs::weakly_canonical(*result.image_path);
      const fs::path scratch = fs::weakly_canonical(request.output_dir);
      const std::string rel = image.lexically_relative(scratch).generic_string();
      if (rel.empty() || rel.starts_with("..") || !rel.ends_with(expected_path_suffix)) {
        discard(result);
        throw Error(ErrorCode::kPathMismatch,
                    "worker wrote '" + rel + "', expected '" + expected_path_suffix + "'");
      }
      result.image_path = image;
    }
  }
  if (result.status != RenderStatus::kOk) discard(result);
  return result;
}

void RenderSandbox::discard(RenderResult& result) {
  if (!result.scratch_dir.empty()) {
    std::error_code ec;
    fs::remove_all(result.scratch_dir, ec);
    result.scratch_dir.clear();
  }
  result.image_path.reset();
}

}  // namespace chartcf
