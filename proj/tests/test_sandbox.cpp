// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <signal.h>

#include <json.hpp>
#include <thread>

#include "chartcf/encoding.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"
#include "chartcf/sandbox.hpp"
#include "corpus.hpp"

using namespace chartcf;
using namespace chartcf::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kScript =
    "import matplotlib.pyplot as plt\n"
    "plt.plot([1, 2, 3])\n"
    "plt.savefig('rendered_images/000002.png')\n";

std::string with_marker(const std::string& marker) {
  return kScript + "# fixture: " + marker + "\n";
}

bool empty_dir(const fs::path& dir) {
  return !fs::exists(dir) || fs::is_empty(dir);
}

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("request and reply encoding") {
  RenderRequest req{"r1", RenderMode::kParseOnly, "print(1)", "/tmp/x",
                    std::chrono::duration<double>(2.5)};
  CHECK(encode_request(req) == json{{"id", "r1"},
                                    {"mode", "parse_only"},
                                    {"code", "print(1)"},
                                    {"out_dir", "/tmp/x"},
                                    {"timeout_s", 2.5}});
  const auto r = decode_reply(
      R"({"id":"r1","status":"ok","image_path":"/tmp/x/a.png","stderr":"","wall_time_s":0.25})");
  CHECK(r.status == RenderStatus::kOk);
  CHECK(r.image_path == fs::path("/tmp/x/a.png"));
  CHECK(r.wall_time == doctest::Approx(0.25));
  const auto e = decode_reply(
      R"({"id":"r2","status":"runtime_error","image_path":null,"stderr":"Traceback","wall_time_s":1})");
  CHECK(e.status == RenderStatus::kRuntimeError);
  CHECK_FALSE(e.image_path);
  CHECK(e.stderr_excerpt == "Traceback");
  CHECK(handshake_line() == R"({"hello":"chartcf-worker","version":1})");
  for (const char* s : {"ok", "parse_error", "runtime_error", "timeout", "no_output"}) {
    CHECK(to_string(parse_render_status(s)) == s);
  }
  CHECK_THROWS_AS(decode_reply("{"), Error);
  CHECK_THROWS_AS(decode_reply(R"({"id":"x","status":"exploded"})"), Error);
}

TEST_CASE("stderr excerpts keep the tail within the limit") {
  std::string long_err(kStderrExcerptLimit * 2, 'a');
  long_err += "\xc3\xa9 final line";
  const auto r = decode_reply(json{{"id", "x"},
                                   {"status", "runtime_error"},
                                   {"image_path", nullptr},
                                   {"stderr", long_err},
                                   {"wall_time_s", 0.1}}
                                  .dump());
  CHECK(r.stderr_excerpt.size() <= kStderrExcerptLimit);
  CHECK(r.stderr_excerpt.ends_with("final line"));
}

TEST_CASE("parse_only") {
  const fs::path scratch = fresh_dir("sandbox-parse");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  CHECK(sandbox.parse_only(kScript).status == RenderStatus::kOk);
  const auto bad = sandbox.parse_only("plt.plot([1, 2)\n");
  CHECK(bad.status == RenderStatus::kParseError);
  CHECK_FALSE(bad.stderr_excerpt.empty());
  CHECK(sandbox.parse_only(with_marker("parse_error")).status == RenderStatus::kParseError);
  CHECK(empty_dir(scratch));
}

TEST_CASE("render produces the expected image") {
  const fs::path scratch = fresh_dir("sandbox-render");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  auto r = sandbox.render(kScript, "rendered_images/000002.png");
  REQUIRE(r.status == RenderStatus::kOk);
  REQUIRE(r.image_path);
  CHECK(r.image_path->string().ends_with("rendered_images/000002.png"));
  CHECK(detect_image_mime(read_text_file(*r.image_path)) == "image/png");
  const auto img = read_png(*r.image_path);
  CHECK(img.width > 0);
  // Same code, same pixels.
  auto again = sandbox.render(kScript, "rendered_images/000002.png");
  CHECK(pixel_digest(*again.image_path) == pixel_digest(*r.image_path));
  RenderSandbox::discard(r);
  RenderSandbox::discard(again);
  CHECK(empty_dir(scratch));
}

TEST_CASE("failing renders leave nothing behind") {
  const fs::path scratch = fresh_dir("sandbox-fail");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  const auto err = sandbox.render(with_marker("runtime_error"), "rendered_images/000002.png");
  CHECK(err.status == RenderStatus::kRuntimeError);
  CHECK_FALSE(err.image_path);
  const auto partial = sandbox.render(with_marker("partial"), "rendered_images/000002.png");
  CHECK(partial.status == RenderStatus::kRuntimeError);
  const auto none = sandbox.render(with_marker("no_output"), "rendered_images/000002.png");
  CHECK(none.status == RenderStatus::kNoOutput);
  CHECK(empty_dir(scratch));
}

TEST_CASE("wrong output path is a PathMismatch") {
  const fs::path scratch = fresh_dir("sandbox-path");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  CHECK(error_of([&] {
          sandbox.render(with_marker("wrong_path"), "rendered_images/000002.png");
        }) == ErrorCode::kPathMismatch);
  CHECK(empty_dir(scratch));
}

TEST_CASE("a crashing worker is replaced") {
  const fs::path scratch = fresh_dir("sandbox-crash");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  CHECK(sandbox.parse_only(kScript).status == RenderStatus::kOk);
  CHECK(sandbox.pool().spawn_count() == 1);
  CHECK(error_of([&] { sandbox.render(with_marker("crash"), "rendered_images/000002.png"); }) ==
        ErrorCode::kWorkerDead);
  auto r = sandbox.render(kScript, "rendered_images/000002.png");
  CHECK(r.status == RenderStatus::kOk);
  CHECK(sandbox.pool().spawn_count() == 2);
  RenderSandbox::discard(r);
  CHECK(empty_dir(scratch));
}

TEST_CASE("an externally killed worker is replaced") {
  const fs::path scratch = fresh_dir("sandbox-kill");
  RenderSandbox sandbox(fixture_sandbox(scratch, 1));
  CHECK(sandbox.parse_only(kScript).status == RenderStatus::kOk);
  const auto pids = sandbox.pool().live_pids();
  REQUIRE(pids.size() == 1);
  ::kill(pids[0], SIGKILL);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  // The dead worker surfaces on the next request; the one after succeeds.
  try {
    sandbox.parse_only(kScript);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kWorkerDead);
  }
  CHECK(sandbox.parse_only(kScript).status == RenderStatus::kOk);
  CHECK(sandbox.pool().spawn_count() == 2);
  CHECK(sandbox.pool().live_pids() != pids);
}

TEST_CASE("timeouts kill and replace the worker") {
  const fs::path scratch = fresh_dir("sandbox-timeout");
  SandboxOptions o = fixture_sandbox(scratch, 1);
  o.render_timeout = std::chrono::duration<double>(0.2);
  o.kill_grace = std::chrono::duration<double>(0.2);
  RenderSandbox sandbox(o);
  const auto start = std::chrono::steady_clock::now();
  const auto r = sandbox.render(with_marker("sleep"), "rendered_images/000002.png");
  CHECK(r.status == RenderStatus::kTimeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));
  auto ok = sandbox.render(kScript, "rendered_images/000002.png");
  CHECK(ok.status == RenderStatus::kOk);
  CHECK(sandbox.pool().spawn_count() == 2);
  RenderSandbox::discard(ok);
  CHECK(empty_dir(scratch));
}

TEST_CASE("parallel renders share the pool") {
  const fs::path scratch = fresh_dir("sandbox-parallel");
  RenderSandbox sandbox(fixture_sandbox(scratch, 3));
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        auto r = sandbox.render(kScript + "# variant " + std::to_string(t * 10 + i) + "\n",
                                "rendered_images/000002.png");
        if (r.status == RenderStatus::kOk) ++ok;
        RenderSandbox::discard(r);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 30);
  CHECK(sandbox.pool().spawn_count() <= 3);
  CHECK(empty_dir(scratch));
}

TEST_CASE("a worker that never greets is rejected") {
  const fs::path scratch = fresh_dir("sandbox-nohello");
  SandboxOptions o = fixture_sandbox(scratch, 1);
  o.worker_command = {"/bin/cat"};
  o.handshake_timeout = std::chrono::duration<double>(0.3);
  RenderSandbox sandbox(o);
  CHECK_THROWS_AS(sandbox.parse_only(kScript), Error);
}
