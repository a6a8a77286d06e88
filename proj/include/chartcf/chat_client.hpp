// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// OpenAI-compatible chat-completions client used for both the code modifier
// and the similarity judge. Requests go through a Transport so the whole
// pipeline can replay canned transcripts without a network.

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace chartcf {

struct ApiConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "CHARTCF_API_KEY";
  std::string model_id;
  int max_retries = 3;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  double requests_per_minute = 0.0;  // <= 0 disables limiting
  std::chrono::milliseconds backoff_initial{1000};
  std::chrono::milliseconds backoff_max{std::chrono::seconds(30)};

  // Throws kConfigError on max_retries < 0 or a non-positive timeout.
  void validate() const;
};

// Serializes slot reservations across threads; callers sleep outside the lock.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);

  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_slot_{};
};

struct ContentPart {
  enum class Kind { kText, kImage };
  Kind kind = Kind::kText;
  std::string text;   // kText
  std::string mime;   // kImage
  std::string bytes;  // kImage, raw file bytes

  static ContentPart text_part(std::string text);
  // Throws kInvalidImage unless the bytes are PNG or JPEG.
  static ContentPart image_part(std::string bytes);
};

struct ChatRequest {
  // Routing key for replayed transcripts, e.g. "modifier/000002".
  std::string tag;
  std::string model;
  std::vector<ContentPart> content;
};

// Single user message whose content is the given parts, images as base64
// data URLs.
nlohmann::json build_chat_body(const ChatRequest& request);

struct HttpReply {
  int status = 0;  // 0 means the request never got a status line
  std::string body;
  bool timed_out = false;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const std::string& tag, const std::string& body) = 0;
};

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string base_url, std::string api_key,
                std::chrono::milliseconds timeout);

  HttpReply post(const std::string& tag, const std::string& body) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix + /chat/completions
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Replays canned replies keyed by request tag. Each tag owns a queue; the
// n-th post for a tag gets the n-th entry, and the last entry repeats once
// the queue is exhausted. Directory form: <dir>/<tag>.jsonl, one entry per
// line, either {"status":200,"content":"..."} (wrapped into a completion
// body), {"status":N,"body":"..."} or {"timeout":true}.
class MockTransport : public Transport {
 public:
  MockTransport() = default;
  explicit MockTransport(std::filesystem::path dir);

  void script(const std::string& tag, std::vector<HttpReply> replies);

  HttpReply post(const std::string& tag, const std::string& body) override;

  int attempts(const std::string& tag) const;
  std::vector<std::string> request_bodies(const std::string& tag) const;
  int total_calls() const;

  static HttpReply completion(std::string_view content);
  static HttpReply entry_from_json(const nlohmann::json& entry);

 private:
  struct Script {
    std::vector<HttpReply> replies;
    std::vector<std::string> bodies;
    bool loaded = false;
  };

  Script& script_for(const std::string& tag);

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, Script> scripts_;
  int total_calls_ = 0;
};

struct ChatReply {
  std::string text;
  int attempts = 0;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

// Immutable after construction and safe to share between workers; the rate
// limiter is the only shared mutable state.
class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ChatClient(ApiConfig config, std::shared_ptr<Transport> transport,
             std::shared_ptr<RateLimiter> limiter = nullptr,
             Sleeper sleeper = nullptr);

  const ApiConfig& config() const { return config_; }

  // Retries HTTP 429, 5xx, connection failures and timeouts up to
  // max_retries times with exponential backoff. Throws kAuthError on 401/403
  // without retrying, kTransientExhausted when retries run out and
  // kMalformedReply when a 200 carries no assistant text.
  ChatReply complete(const ChatRequest& request) const;

 private:
  ApiConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
};

// Extracts choices[0].message.content (string or text parts).
ChatReply parse_chat_completion(const std::string& body);

// Sends [image, prompt] to the modifier model.
ChatReply call_modifier(const ChatClient& client, const std::string& prompt,
                        const std::string& image_bytes, const std::string& tag);

// Reads CHARTCF_API_BASE and the key variable named by api_key_env.
ApiConfig resolve_from_environment(ApiConfig config);
std::string api_key_from_environment(const ApiConfig& config);

}  // namespace chartcf
