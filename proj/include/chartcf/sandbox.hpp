// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Plotting code never runs inside this process. A pool of worker
// subprocesses speaks a line-delimited JSON protocol:
//
//   worker -> {"hello":"chartcf-worker","version":1}          (once)
//   request  {"id":str,"mode":"parse_only"|"render","code":str,
//             "out_dir":str,"timeout_s":number}
//   reply    {"id":str,"status":str,"image_path":str|null,"stderr":str,
//             "wall_time_s":number}

#pragma once

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chartcf {

enum class RenderMode { kParseOnly, kRender };
enum class RenderStatus { kOk, kParseError, kRuntimeError, kTimeout, kNoOutput };

std::string to_string(RenderMode mode);
std::string to_string(RenderStatus status);
RenderStatus parse_render_status(const std::string& text);

inline constexpr std::size_t kStderrExcerptLimit = 4096;

struct RenderRequest {
  std::string request_id;
  RenderMode mode = RenderMode::kRender;
  std::string code;
  std::filesystem::path output_dir;
  std::chrono::duration<double> timeout{60.0};
};

struct RenderResult {
  std::string request_id;
  RenderStatus status = RenderStatus::kNoOutput;
  std::optional<std::filesystem::path> image_path;
  std::string stderr_excerpt;
  double wall_time = 0.0;
  // Per-request directory holding image_path; empty once removed.
  std::filesystem::path scratch_dir;
};

nlohmann::json encode_request(const RenderRequest& request);
// Throws kProtocolError on a reply that does not follow the wire format.
RenderResult decode_reply(const std::string& line);

std::string_view handshake_line();

struct SandboxOptions {
  std::vector<std::string> worker_command;
  std::size_t pool_size = 0;  // 0 means one worker per hardware thread
  std::filesystem::path scratch_root;
  std::chrono::duration<double> render_timeout{60.0};
  std::chrono::duration<double> parse_timeout{10.0};
  // Extra time granted past the request timeout before the worker is killed.
  std::chrono::duration<double> kill_grace{2.0};
  std::chrono::duration<double> handshake_timeout{30.0};
};

// One live worker subprocess connected over a socketpair.
class WorkerProcess {
 public:
  WorkerProcess(const std::vector<std::string>& argv,
                std::chrono::duration<double> handshake_timeout);
  ~WorkerProcess();

  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  pid_t pid() const { return pid_; }

  // Writes one line and waits for one reply line. Returns nullopt when the
  // deadline passes; throws kWorkerDead if the process goes away.
  std::optional<std::string> exchange(const std::string& line,
                                      std::chrono::steady_clock::time_point deadline);

  void kill();

 private:
  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline);

  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

class WorkerPool {
 public:
  explicit WorkerPool(SandboxOptions options);
  ~WorkerPool();

  // Exclusive use of one worker; spawned lazily on first lease.
  class Lease {
   public:
    Lease(WorkerPool* pool, std::size_t slot) : pool_(pool), slot_(slot) {}
    Lease(Lease&& other) noexcept;
    Lease& operator=(Lease&&) = delete;
    ~Lease();

    WorkerProcess& worker();
    // Kills the current process; the next worker() call spawns a new one.
    void discard_worker();

   private:
    WorkerPool* pool_;
    std::size_t slot_;
  };

  Lease acquire();

  const SandboxOptions& options() const { return options_; }
  std::size_t size() const { return slots_.size(); }
  // Number of processes spawned so far, replacements included.
  int spawn_count() const { return spawn_count_.load(); }
  std::vector<pid_t> live_pids() const;

 private:
  void release(std::size_t slot);

  SandboxOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable available_;
  std::vector<std::unique_ptr<WorkerProcess>> slots_;
  std::vector<bool> leased_;
  std::atomic<int> spawn_count_{0};
};

class RenderSandbox {
 public:
  explicit RenderSandbox(SandboxOptions options);

  // Compile-only check. Status is ok, parse_error or timeout; no files are
  // left behind.
  RenderResult parse_only(const std::string& code);

  // Executes the script in a fresh scratch directory. On ok, image_path ends
  // with expected_path_suffix; a different file name throws kPathMismatch.
  // Any non-ok status leaves no scratch directory behind.
  RenderResult render(const std::string& code, const std::string& expected_path_suffix);

  // Lower-level call used by the two above.
  RenderResult execute(const RenderRequest& request);

  // Removes the scratch directory of a consumed result.
  static void discard(RenderResult& result);

  WorkerPool& pool() { return pool_; }

 private:
  std::string next_request_id();

  WorkerPool pool_;
  std::atomic<unsigned long long> counter_{0};
};

}  // namespace chartcf
