// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. The file format is one `key = value` per line, `#`
// starts a comment, and API settings are prefixed `modifier.` or `judge.`:
//
//   manifest = seeds/manifest.jsonl
//   out_dir = runs/first
//   concurrency = 8
//   modifier.model_id = gpt-5
//   modifier.requests_per_minute = 500
//   judge.model_id = gpt-5-mini
//   selection.strategy = keep_low
//   selection.rho = 40

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartcf/chat_client.hpp"
#include "chartcf/emitter.hpp"
#include "chartcf/similarity.hpp"

namespace chartcf {

struct EmitOptions {
  EmitMode mode = EmitMode::kBoth;
  bool symmetric = false;
};

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  ApiConfig modifier;
  ApiConfig judge;
  SelectionConfig selection;
  EmitOptions emit;
  int concurrency = 1;
  bool resume = false;
  std::size_t workers = 0;
  std::vector<std::string> worker_command{"python3", "-m", "chartcf_worker"};
  double render_timeout_s = 60.0;
  double parse_timeout_s = 10.0;
  std::optional<std::filesystem::path> distractor_template;

  RunConfig();

  // kConfigError describing the first inconsistent setting.
  void validate() const;
};

// Throws kConfigError on a line without '=' or a repeated key.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Throws kConfigError on unknown keys or unparsable values.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& values);

RunConfig load_config(const std::filesystem::path& file);

std::vector<std::string> split_command(const std::string& command);

}  // namespace chartcf
