#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace semsteer {

// A versioned prompt template. Files are split into a "[system]" and a
// "[user]" section; version is the first 12 hex chars of the file's SHA-256.
struct PromptTemplate {
  std::string name;
  std::string system_text;
  std::string user_text;
  std::string version;
};

PromptTemplate parse_template(std::string_view name, std::string_view file_text);

// Replaces `{name}` for every key in `values` in one left-to-right pass;
// substituted text is never rescanned and unknown braces are left alone.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& values);

class TemplateStore {
 public:
  // Loads every "*.txt" file in `dir`; the file stem is the template name.
  static TemplateStore load(const std::filesystem::path& dir);
  // Built-in directory, overridable by the SEMSTEER_TEMPLATE_DIR environment variable.
  static const TemplateStore& defaults();

  const PromptTemplate& get(std::string_view name) const;
  bool has(std::string_view name) const { return templates_.count(std::string(name)) != 0; }
  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace semsteer
