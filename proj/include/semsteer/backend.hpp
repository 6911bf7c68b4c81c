#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semsteer/raster.hpp"

namespace semsteer {

inline constexpr int kDefaultMaxTokens = 1024;

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<RgbImage> images;  // order is significant
  std::string model_name;
  int max_tokens = kDefaultMaxTokens;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string text;  // raw completion, untrimmed
  std::int64_t latency_ms = 0;
  std::string backend_id;
  int attempt_count = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Lookup key the runner embeds as the last line of user_text:
// "#key: <scenario>/<context>/<condition>".
inline constexpr std::string_view kKeyLinePrefix = "#key: ";
std::string attach_key(std::string_view user_text, std::string_view key);
std::optional<std::string> extract_key(std::string_view user_text);
std::string strip_key(std::string_view user_text);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter = 0.2;  // +-20%
};

// Delay before retry number `retry` (1-based): base * factor^(retry-1),
// scaled by a uniform factor in [1 - jitter, 1 + jitter] drawn from `unit`.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, double unit);

struct EndpointConfig {
  std::string url;          // e.g. "http://127.0.0.1:8000/v1"
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  int max_tokens = kDefaultMaxTokens;
  double temperature = 0.0;
  int timeout_s = 120;
};

struct HttpReply {
  int status = 0;  // 0 when the transport failed before a status arrived
  std::string body;
  std::string error;
};

class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpBackend(EndpointConfig config, std::string api_key, RetryPolicy retry = {}, Sleeper sleeper = {});
  // Resolves the API key from the configured environment variable.
  static HttpBackend from_config(const EndpointConfig& config, RetryPolicy retry = {});

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return "http:" + config_.model; }

  // Chat-completions body: system message plus one user message whose
  // content lists the images (base64 PNG data URLs, in order) then the text.
  nlohmann::json build_payload(const ChatRequest& request) const;
  static std::string parse_completion(const std::string& body);

 private:
  HttpReply post(const std::string& body) const;

  EndpointConfig config_;
  std::string api_key_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_;
};

struct ResponseScript {
  std::optional<std::string> default_text;
  std::map<std::string, std::string> entries;

  static ResponseScript parse(const nlohmann::json& j);
  static ResponseScript load(const std::filesystem::path& path);
};

ChatResponse mock_complete(const ChatRequest& request, const ResponseScript& script);

class MockBackend : public Backend {
 public:
  explicit MockBackend(ResponseScript script) : script_(std::move(script)) {}
  ChatResponse complete(const ChatRequest& request) override { return mock_complete(request, script_); }
  std::string id() const override { return "mock"; }

 private:
  ResponseScript script_;
};

}  // namespace semsteer
