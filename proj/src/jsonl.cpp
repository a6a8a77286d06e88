// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/jsonl.hpp"

#include <sstream>

#include "chartcf/error.hpp"

namespace chartcf {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<nlohmann::json> read_jsonl(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + file.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kManifestError,
                  file.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return rows;
}

void write_text_atomic(const fs::path& file, const std::string& contents) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "short write " + tmp.string());
  }
  fs::rename(tmp, file);
}

void write_jsonl_atomic(const fs::path& file,
                        const std::vector<nlohmann::json>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    text += '\n';
  }
  write_text_atomic(file, text);
}

JsonlAppender::JsonlAppender(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  out_.open(file, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorCode::kIoError, "cannot append " + file.string());
}

void JsonlAppender::append(const nlohmann::json& row) {
  std::string line =
      row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  line += '\n';
  std::lock_guard lock(mutex_);
  out_ << line;
  out_.flush();
}

}  // namespace chartcf
