// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/chat_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#include "chartcf/encoding.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"

namespace chartcf {

using nlohmann::json;

void ApiConfig::validate() const {
  if (max_retries < 0) {
    throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  }
  if (timeout.count() <= 0) {
    throw Error(ErrorCode::kConfigError, "timeout must be > 0");
  }
  if (base_url.empty()) throw Error(ErrorCode::kConfigError, "empty base_url");
}

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0.0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    slot = std::max(std::chrono::steady_clock::now(), next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

ContentPart ContentPart::text_part(std::string text) {
  ContentPart p;
  p.kind = Kind::kText;
  p.text = std::move(text);
  return p;
}

ContentPart ContentPart::image_part(std::string bytes) {
  auto mime = detect_image_mime(bytes);
  if (!mime) throw Error(ErrorCode::kInvalidImage, "image is neither PNG nor JPEG");
  ContentPart p;
  p.kind = Kind::kImage;
  p.mime = *mime;
  p.bytes = std::move(bytes);
  return p;
}

json build_chat_body(const ChatRequest& request) {
  json content = json::array();
  for (const auto& part : request.content) {
    if (part.kind == ContentPart::Kind::kText) {
      content.push_back({{"type", "text"}, {"text", part.text}});
    } else {
      content.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:" + part.mime + ";base64," + base64_encode(part.bytes)}}}});
    }
  }
  return json{{"model", request.model},
              {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
}

HttpTransport::HttpTransport(std::string base_url, std::string api_key,
                             std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, kUrl)) {
    throw Error(ErrorCode::kConfigError, "bad base_url '" + base_url + "'");
  }
  origin_ = m[1].str();
  std::string prefix = m[2].str();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

HttpReply HttpTransport::post(const std::string& /*tag*/, const std::string& body) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, body, "application/json");
  HttpReply reply;
  if (!res) {
    const auto err = res.error();
    reply.timed_out = err == httplib::Error::Read ||
                      err == httplib::Error::Write ||
                      err == httplib::Error::ConnectionTimeout;
    reply.body = httplib::to_string(err);
    return reply;
  }
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

MockTransport::MockTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

void MockTransport::script(const std::string& tag, std::vector<HttpReply> replies) {
  std::lock_guard lock(mutex_);
  Script& s = scripts_[tag];
  s.replies = std::move(replies);
  s.loaded = true;
}

HttpReply MockTransport::completion(std::string_view content) {
  json body{{"id", "mock"},
            {"object", "chat.completion"},
            {"choices",
             json::array({{{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", content}}},
                           {"finish_reason", "stop"}}})}};
  return {200, body.dump(), false};
}

HttpReply MockTransport::entry_from_json(const json& entry) {
  if (entry.value("timeout", false)) return {0, "", true};
  const int status = entry.value("status", 200);
  if (entry.contains("content")) {
    HttpReply reply = completion(entry.at("content").get<std::string>());
    if (entry.contains("usage")) {
      json body = json::parse(reply.body);
      body["usage"] = entry.at("usage");
      reply.body = body.dump();
    }
    reply.status = status;
    return reply;
  }
  return {status, entry.value("body", ""), false};
}

MockTransport::Script& MockTransport::script_for(const std::string& tag) {
  Script& s = scripts_[tag];
  if (!s.loaded) {
    s.loaded = true;
    if (!dir_.empty()) {
      const auto file = dir_ / (tag + ".jsonl");
      if (std::filesystem::is_regular_file(file)) {
        for (const json& entry : read_jsonl(file)) {
          s.replies.push_back(entry_from_json(entry));
        }
      }
    }
  }
  return s;
}

HttpReply MockTransport::post(const std::string& tag, const std::string& body) {
  std::lock_guard lock(mutex_);
  ++total_calls_;
  Script& s = script_for(tag);
  s.bodies.push_back(body);
  if (s.replies.empty()) {
    return {404, "no transcript for tag '" + tag + "'", false};
  }
  const std::size_t index = std::min(s.bodies.size() - 1, s.replies.size() - 1);
  return s.replies[index];
}

int MockTransport::attempts(const std::string& tag) const {
  std::lock_guard lock(mutex_);
  auto it = scripts_.find(tag);
  return it == scripts_.end() ? 0 : static_cast<int>(it->second.bodies.size());
}

std::vector<std::string> MockTransport::request_bodies(const std::string& tag) const {
  std::lock_guard lock(mutex_);
  auto it = scripts_.find(tag);
  return it == scripts_.end() ? std::vector<std::string>{} : it->second.bodies;
}

int MockTransport::total_calls() const {
  std::lock_guard lock(mutex_);
  return total_calls_;
}

ChatReply parse_chat_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedReply, std::string("body is not JSON: ") + e.what());
  }
  ChatReply reply;
  try {
    const json& message = j.at("choices").at(0).at("message");
    const json& content = message.at("content");
    if (content.is_string()) {
      reply.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (part.value("type", "") == "text") reply.text += part.value("text", "");
      }
    }
    if (j.contains("usage") && j.at("usage").is_object()) {
      reply.prompt_tokens = j.at("usage").value("prompt_tokens", 0LL);
      reply.completion_tokens = j.at("usage").value("completion_tokens", 0LL);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedReply, std::string("no assistant message: ") + e.what());
  }
  if (reply.text.empty()) {
    throw Error(ErrorCode::kMalformedReply, "assistant message has no text");
  }
  return reply;
}

ChatClient::ChatClient(ApiConfig config, std::shared_ptr<Transport> transport,
                       std::shared_ptr<RateLimiter> limiter, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      limiter_(std::move(limiter)),
      sleeper_(std::move(sleeper)) {
  config_.validate();
  if (!transport_) throw Error(ErrorCode::kConfigError, "no transport");
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

ChatReply ChatClient::complete(const ChatRequest& request) const {
  ChatRequest with_model = request;
  if (with_model.model.empty()) with_model.model = config_.model_id;
  const std::string body = build_chat_body(with_model).dump();
  const int max_attempts = config_.max_retries + 1;
  std::string last_failure;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    const HttpReply reply = transport_->post(request.tag, body);
    if (reply.status == 401 || reply.status == 403) {
      throw Error(ErrorCode::kAuthError,
                  "HTTP " + std::to_string(reply.status) + " for " + request.tag);
    }
    const bool transient = reply.timed_out || reply.status == 0 ||
                           reply.status == 429 || reply.status >= 500;
    if (reply.status == 200) {
      ChatReply parsed = parse_chat_completion(reply.body);
      parsed.attempts = attempt;
      return parsed;
    }
    if (!transient) {
      throw Error(ErrorCode::kProtocolError,
                  "HTTP " + std::to_string(reply.status) + " for " + request.tag +
                      ": " + reply.body.substr(0, 200));
    }
    last_failure = reply.timed_out ? std::string("timeout")
                                   : "HTTP " + std::to_string(reply.status);
    if (attempt < max_attempts) {
      auto delay = config_.backoff_initial * (1LL << std::min(attempt - 1, 20));
      sleeper_(std::min<std::chrono::milliseconds>(delay, config_.backoff_max));
    }
  }
  throw Error(ErrorCode::kTransientExhausted,
              request.tag + " failed after " + std::to_string(max_attempts) +
                  " attempts (last: " + last_failure + ")");
}

ChatReply call_modifier(const ChatClient& client, const std::string& prompt,
                        const std::string& image_bytes, const std::string& tag) {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  ChatRequest request;
  request.tag = tag;
  request.content.push_back(ContentPart::image_part(image_bytes));
  request.content.push_back(ContentPart::text_part(prompt));
  return client.complete(request);
}

ApiConfig resolve_from_environment(ApiConfig config) {
  if (const char* base = std::getenv("CHARTCF_API_BASE"); base && *base) {
    config.base_url = base;
  }
  return config;
}

std::string api_key_from_environment(const ApiConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  return key ? std::string(key) : std::string();
}

}  // namespace chartcf
