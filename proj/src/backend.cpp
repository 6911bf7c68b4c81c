#include "semsteer/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "httplib.h"
#include "semsteer/errors.hpp"

namespace semsteer {

using nlohmann::json;

std::string attach_key(std::string_view user_text, std::string_view key) {
  return std::string(strip_key(user_text)) + "\n" + std::string(kKeyLinePrefix) + std::string(key);
}

namespace {

// Position of the trailing key line, if any.
std::optional<std::size_t> key_line_start(std::string_view text) {
  const auto nl = text.rfind('\n');
  const std::size_t start = nl == std::string_view::npos ? 0 : nl + 1;
  if (text.substr(start).rfind(kKeyLinePrefix, 0) == 0) return start;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_key(std::string_view user_text) {
  const auto start = key_line_start(user_text);
  if (!start) return std::nullopt;
  return std::string(user_text.substr(*start + kKeyLinePrefix.size()));
}

std::string strip_key(std::string_view user_text) {
  const auto start = key_line_start(user_text);
  if (!start) return std::string(user_text);
  std::size_t end = *start;
  if (end > 0 && user_text[end - 1] == '\n') --end;
  return std::string(user_text.substr(0, end));
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, double unit) {
  const double base = static_cast<double>(policy.base_delay.count()) * std::pow(policy.factor, retry - 1);
  const double scale = 1.0 + policy.jitter * (2.0 * unit - 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(base * scale)));
}

HttpBackend::HttpBackend(EndpointConfig config, std::string api_key, RetryPolicy retry, Sleeper sleeper)
    : config_(std::move(config)), api_key_(std::move(api_key)), retry_(retry), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const auto scheme = config_.url.find("://");
  if (scheme == std::string::npos) throw ConfigError("backend.url", "expected scheme://host[:port][/path]");
  const auto path_start = config_.url.find('/', scheme + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : config_.url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

HttpBackend HttpBackend::from_config(const EndpointConfig& config, RetryPolicy retry) {
  std::string key;
  if (!config.api_key_env.empty()) {
    const char* v = std::getenv(config.api_key_env.c_str());
    if (!v || !*v) {
      throw CredentialError("environment variable '" + config.api_key_env + "' holding the API key is not set");
    }
    key = v;
  }
  return HttpBackend(config, std::move(key), retry);
}

json HttpBackend::build_payload(const ChatRequest& request) const {
  json content = json::array();
  for (const auto& img : request.images) {
    const auto png = encode_png(img);
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  content.push_back({{"type", "text"}, {"text", strip_key(request.user_text)}});
  json messages = json::array();
  if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
  messages.push_back({{"role", "user"}, {"content", content}});
  return {{"model", request.model_name.empty() ? config_.model : request.model_name},
          {"messages", messages},
          {"max_tokens", request.max_tokens},
          {"temperature", request.temperature}};
}

std::string HttpBackend::parse_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response body is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProtocolError("response has no choices");
  }
  const json& msg = j["choices"][0].value("message", json::object());
  if (!msg.contains("content")) throw ProtocolError("first choice has no message content");
  const json& c = msg["content"];
  if (c.is_string()) return c.get<std::string>();
  if (c.is_array()) {
    std::string text;
    for (const auto& part : c)
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    return text;
  }
  throw ProtocolError("message content has unexpected type");
}

HttpReply HttpBackend::post(const std::string& body) const {
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(config_.timeout_s, 0);
  cli.set_read_timeout(config_.timeout_s, 0);
  cli.set_write_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, ""};
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  const std::string body = build_payload(request).dump();
  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto start = std::chrono::steady_clock::now();
  HttpReply reply;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    reply = post(body);
    const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (reply.status == 401 || reply.status == 403) {
      throw CredentialError("backend rejected credentials (HTTP " + std::to_string(reply.status) + ")");
    }
    if (!retryable) {
      if (reply.status < 200 || reply.status >= 300) {
        throw ProtocolError("unexpected HTTP status " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200));
      }
      ChatResponse out;
      out.text = parse_completion(reply.body);
      out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
      out.backend_id = id();
      out.attempt_count = attempt;
      return out;
    }
    if (attempt < retry_.max_attempts) sleeper_(backoff_delay(retry_, attempt, unit(jitter_rng)));
  }
  const std::string why = reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status);
  throw TransportError("request failed after " + std::to_string(retry_.max_attempts) + " attempts: " + why,
                       reply.status, retry_.max_attempts);
}

ResponseScript ResponseScript::parse(const json& j) {
  if (!j.is_object()) throw ScriptError("response script must be a JSON object");
  ResponseScript s;
  for (const auto& [k, v] : j.items()) {
    if (k != "default" && k != "entries") throw ScriptError("unknown response-script key '" + k + "'");
  }
  if (j.contains("default") && !j["default"].is_null()) {
    if (!j["default"].is_string()) throw ScriptError("'default' must be a string or null");
    s.default_text = j["default"].get<std::string>();
  }
  if (j.contains("entries")) {
    if (!j["entries"].is_object()) throw ScriptError("'entries' must be an object");
    for (const auto& [k, v] : j["entries"].items()) {
      if (!v.is_string()) throw ScriptError("entry '" + k + "' must be a string");
      s.entries.emplace(k, v.get<std::string>());
    }
  }
  return s;
}

ResponseScript ResponseScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScriptError("cannot read response script: " + path.string());
  try {
    return parse(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ScriptError(path.string() + ": " + e.what());
  }
}

ChatResponse mock_complete(const ChatRequest& request, const ResponseScript& script) {
  ChatResponse out;
  out.backend_id = "mock";
  out.attempt_count = 1;
  const auto key = extract_key(request.user_text);
  if (key) {
    if (auto it = script.entries.find(*key); it != script.entries.end()) {
      out.text = it->second;
      return out;
    }
  }
  if (!script.default_text) {
    throw ScriptError("no scripted response for key '" + key.value_or("<none>") + "' and no default");
  }
  out.text = *script.default_text;
  return out;
}

}  // namespace semsteer
