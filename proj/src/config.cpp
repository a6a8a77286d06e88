// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/config.hpp"

#include <charconv>
#include <sstream>

#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"

namespace chartcf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

long long to_integer(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kConfigError, key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfigError, key + ": expected a number, got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::kConfigError, key + ": expected true or false, got '" + value + "'");
}

bool apply_api(ApiConfig& api, const std::string& key, const std::string& field,
               const std::string& value) {
  if (field == "base_url") {
    api.base_url = value;
  } else if (field == "api_key_env") {
    api.api_key_env = value;
  } else if (field == "model_id") {
    api.model_id = value;
  } else if (field == "max_retries") {
    api.max_retries = static_cast<int>(to_integer(key, value));
  } else if (field == "timeout_s") {
    api.timeout = std::chrono::milliseconds(
        static_cast<long long>(to_double(key, value) * 1000.0));
  } else if (field == "requests_per_minute") {
    api.requests_per_minute = to_double(key, value);
  } else if (field == "backoff_initial_ms") {
    api.backoff_initial = std::chrono::milliseconds(to_integer(key, value));
  } else if (field == "backoff_max_ms") {
    api.backoff_max = std::chrono::milliseconds(to_integer(key, value));
  } else {
    return false;
  }
  return true;
}

}  // namespace

RunConfig::RunConfig() {
  modifier.model_id = "gpt-5";
  judge.model_id = "gpt-5-mini";
}

void RunConfig::validate() const {
  try {
    modifier.validate();
    judge.validate();
    selection.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (concurrency < 1) throw Error(ErrorCode::kConfigError, "concurrency must be >= 1");
  if (render_timeout_s <= 0 || parse_timeout_s <= 0) {
    throw Error(ErrorCode::kConfigError, "render/parse timeouts must be > 0");
  }
  if (worker_command.empty()) throw Error(ErrorCode::kConfigError, "empty worker command");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigError,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": empty key");
    }
    if (!values.emplace(key, value).second) {
      throw Error(ErrorCode::kConfigError, "duplicate key '" + key + "'");
    }
  }
  return values;
}

void apply_config(RunConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key.starts_with("modifier.")) {
      if (apply_api(c.modifier, key, key.substr(9), value)) continue;
    } else if (key.starts_with("judge.")) {
      if (apply_api(c.judge, key, key.substr(6), value)) continue;
    } else if (key == "manifest") {
      c.manifest = value;
      continue;
    } else if (key == "out_dir") {
      c.out_dir = value;
      continue;
    } else if (key == "concurrency") {
      c.concurrency = static_cast<int>(to_integer(key, value));
      continue;
    } else if (key == "resume") {
      c.resume = to_bool(key, value);
      continue;
    } else if (key == "workers") {
      c.workers = static_cast<std::size_t>(to_integer(key, value));
      continue;
    } else if (key == "worker_command") {
      c.worker_command = split_command(value);
      continue;
    } else if (key == "render_timeout_s") {
      c.render_timeout_s = to_double(key, value);
      continue;
    } else if (key == "parse_timeout_s") {
      c.parse_timeout_s = to_double(key, value);
      continue;
    } else if (key == "distractor_template") {
      c.distractor_template = value;
      continue;
    } else if (key == "selection.strategy") {
      try {
        c.selection.strategy = parse_selection_strategy(value);
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfigError, e.what());
      }
      continue;
    } else if (key == "selection.rho") {
      c.selection.rho = to_double(key, value);
      continue;
    } else if (key == "selection.rng_seed") {
      c.selection.rng_seed = static_cast<std::uint64_t>(to_integer(key, value));
      continue;
    } else if (key == "emit.mode") {
      try {
        c.emit.mode = parse_emit_mode(value);
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfigError, e.what());
      }
      continue;
    } else if (key == "emit.symmetric") {
      c.emit.symmetric = to_bool(key, value);
      continue;
    }
    throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
  }
}

RunConfig load_config(const std::filesystem::path& file) {
  RunConfig config;
  apply_config(config, parse_key_values(read_text_file(file)));
  return config;
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> parts;
  std::istringstream in(command);
  std::string part;
  while (in >> part) parts.push_back(part);
  return parts;
}

}  // namespace chartcf
