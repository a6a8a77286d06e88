// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace chartcf {

// Parses every non-blank line; throws Error(kIoError/kManifestError) naming
// the offending line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& file);

std::string read_text_file(const std::filesystem::path& file);

// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& file,
                       const std::string& contents);

void write_jsonl_atomic(const std::filesystem::path& file,
                        const std::vector<nlohmann::json>& rows);

// Serialized appender; each append() is flushed before returning so a crash
// loses at most the line in flight.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& file);

  void append(const nlohmann::json& row);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace chartcf
