#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace semsteer {

// Base for every error thrown by the library. `kind()` is a short stable tag
// that ends up in ResultRecord.error and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message);
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& m) : Error("argument", m) {}
};

struct MissingImageError : Error {
  explicit MissingImageError(const std::string& path)
      : Error("missing_image", "image file not found or unreadable: " + path), path(path) {}
  std::string path;
};

struct MissingAnnotationError : Error {
  explicit MissingAnnotationError(const std::string& m) : Error("missing_annotation", m) {}
};

struct PlacementError : Error {
  explicit PlacementError(const std::string& m) : Error("placement", m) {}
};

struct TransportError : Error {
  TransportError(const std::string& m, int last_status, int attempts)
      : Error("transport", m), last_status(last_status), attempts(attempts) {}
  int last_status;  // 0 when no HTTP status was received
  int attempts;
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& m) : Error("protocol", m) {}
};

struct CredentialError : Error {
  explicit CredentialError(const std::string& m) : Error("credential", m) {}
};

struct ScriptError : Error {
  explicit ScriptError(const std::string& m) : Error("script", m) {}
};

struct JudgeParseError : Error {
  explicit JudgeParseError(const std::string& m) : Error("judge_parse", m) {}
};

struct AggregationError : Error {
  explicit AggregationError(const std::string& m) : Error("aggregation", m) {}
};

struct SuppressionError : Error {
  explicit SuppressionError(const std::string& m) : Error("suppression", m) {}
};

struct SelectionError : Error {
  explicit SelectionError(const std::string& m) : Error("selection", m) {}
};

struct SpotterParseError : Error {
  explicit SpotterParseError(const std::string& m) : Error("spotter_parse", m) {}
};

struct ConfigError : Error {
  ConfigError(const std::string& field_path, const std::string& m)
      : Error("config", field_path.empty() ? m : field_path + ": " + m), field_path(field_path) {}
  std::string field_path;
};

}  // namespace semsteer
