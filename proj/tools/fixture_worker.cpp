// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Stand-in render worker for offline runs and tests. It speaks the worker
// line protocol but never executes Python; behaviour is scripted by marker
// comments in the submitted code:
//
//   # fixture: parse_error     parse_only reports a syntax error
//   # fixture: runtime_error   render raises
//   # fixture: partial         render writes a truncated PNG, then raises
//   # fixture: no_output       render finishes without saving
//   # fixture: wrong_path      render saves to rendered_images/999999.png
//   # fixture: sleep           render hangs until killed
//   # fixture: crash           the worker exits mid-request
//   # fixture: image=<path>    render copies a pre-rendered image
//
// Unbalanced brackets also count as a parse error. Otherwise render writes
// a small PNG whose pixels are derived from the code's hash at the first
// rendered_images/NNNNNN.png path in the code.

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "chartcf/encoding.hpp"
#include "chartcf/validator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool has_marker(const std::string& code, const std::string& marker) {
  return code.find("# fixture: " + marker) != std::string::npos;
}

std::string marker_value(const std::string& code, const std::string& key) {
  const std::string prefix = "# fixture: " + key + "=";
  const auto pos = code.find(prefix);
  if (pos == std::string::npos) return {};
  const auto start = pos + prefix.size();
  const auto end = code.find('\n', start);
  return code.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

bool brackets_balanced(const std::string& code) {
  std::string stack;
  char quote = 0;
  bool comment = false;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const char c = code[i];
    if (comment) {
      if (c == '\n') comment = false;
      continue;
    }
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    switch (c) {
      case '#': comment = true; break;
      case '\'':
      case '"': quote = c; break;
      case '(': stack += ')'; break;
      case '[': stack += ']'; break;
      case '{': stack += '}'; break;
      case ')':
      case ']':
      case '}':
        if (stack.empty() || stack.back() != c) return false;
        stack.pop_back();
        break;
      default: break;
    }
  }
  return stack.empty() && quote == 0;
}

chartcf::RgbaImage synthesize_chart(const std::string& code) {
  const std::string digest = chartcf::sha256_hex(code);
  chartcf::RgbaImage image;
  image.width = 32;
  image.height = 24;
  image.pixels.resize(std::size_t{image.width} * image.height * 4);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    for (std::uint32_t x = 0; x < image.width; ++x) {
      const std::size_t at = (std::size_t{y} * image.width + x) * 4;
      const std::size_t bar = x / 4;
      const int height = (digest[bar % digest.size()] % 16) + 4;
      const bool filled = static_cast<int>(image.height - y) <= height;
      image.pixels[at + 0] = filled ? static_cast<std::uint8_t>(digest[(bar * 3) % 64] * 3) : 255;
      image.pixels[at + 1] = filled ? static_cast<std::uint8_t>(digest[(bar * 5 + 1) % 64] * 2) : 255;
      image.pixels[at + 2] = filled ? 160 : 255;
      image.pixels[at + 3] = 255;
    }
  }
  return image;
}

json reply(const std::string& id, const std::string& status,
           const std::optional<fs::path>& image, const std::string& err, double wall) {
  return json{{"id", id},
              {"status", status},
              {"image_path", image ? json(image->string()) : json(nullptr)},
              {"stderr", err},
              {"wall_time_s", wall}};
}

json handle(const json& request) {
  const auto start = std::chrono::steady_clock::now();
  const std::string id = request.at("id").get<std::string>();
  const std::string mode = request.at("mode").get<std::string>();
  const std::string code = request.at("code").get<std::string>();
  const fs::path out_dir = request.at("out_dir").get<std::string>();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  if (mode == "parse_only") {
    if (has_marker(code, "parse_error") || !brackets_balanced(code)) {
      return reply(id, "parse_error", std::nullopt,
                   "SyntaxError: '(' was never closed", elapsed());
    }
    return reply(id, "ok", std::nullopt, "", elapsed());
  }
  if (mode != "render") {
    return reply(id, "protocol_error", std::nullopt, "unknown mode " + mode, elapsed());
  }

  if (has_marker(code, "crash")) _exit(3);
  if (has_marker(code, "sleep")) {
    for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
  }
  if (has_marker(code, "runtime_error")) {
    return reply(id, "runtime_error", std::nullopt,
                 "Traceback (most recent call last):\nRuntimeError: scripted failure",
                 elapsed());
  }
  if (has_marker(code, "no_output")) {
    return reply(id, "no_output", std::nullopt, "", elapsed());
  }

  std::string relative;
  if (has_marker(code, "wrong_path")) {
    relative = "rendered_images/999999.png";
  } else {
    const auto paths = chartcf::extract_save_paths(code);
    if (paths.empty()) return reply(id, "no_output", std::nullopt, "", elapsed());
    relative = *paths.begin();
  }
  const fs::path target = out_dir / relative;
  fs::create_directories(target.parent_path());

  if (has_marker(code, "partial")) {
    chartcf::write_png(target, synthesize_chart(code));
    fs::resize_file(target, fs::file_size(target) / 2);
    return reply(id, "runtime_error", std::nullopt, "OSError: disk full", elapsed());
  }
  if (const std::string source = marker_value(code, "image"); !source.empty()) {
    fs::copy_file(source, target, fs::copy_options::overwrite_existing);
  } else {
    chartcf::write_png(target, synthesize_chart(code));
  }
  return reply(id, "ok", target, "", elapsed());
}

}  // namespace

int main() {
  std::ios::sync_with_stdio(false);
  std::cout << R"({"hello":"chartcf-worker","version":1})" << std::endl;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json out;
    try {
      out = handle(json::parse(line));
    } catch (const std::exception& e) {
      std::string id;
      try {
        id = json::parse(line).value("id", "");
      } catch (...) {
      }
      out = reply(id, "protocol_error", std::nullopt, e.what(), 0.0);
    }
    std::cout << out.dump(-1, ' ', false, json::error_handler_t::replace) << std::endl;
  }
  return 0;
}
