#include "semsteer/templates.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "semsteer/errors.hpp"
#include "semsteer/raster.hpp"

namespace semsteer {

namespace {

std::string trim_newlines(std::string s) {
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

PromptTemplate parse_template(std::string_view name, std::string_view file_text) {
  static constexpr std::string_view kSystem = "[system]\n";
  static constexpr std::string_view kUser = "\n[user]\n";
  PromptTemplate t;
  t.name = std::string(name);
  t.version = sha256_hex(file_text).substr(0, 12);
  if (file_text.substr(0, kSystem.size()) != kSystem) {
    throw ParseError("template '" + t.name + "' must start with a [system] line");
  }
  const auto user = file_text.find(kUser);
  if (user == std::string_view::npos) throw ParseError("template '" + t.name + "' lacks a [user] section");
  t.system_text = trim_newlines(std::string(file_text.substr(kSystem.size(), user - kSystem.size())));
  t.user_text = trim_newlines(std::string(file_text.substr(user + kUser.size())));
  return t;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("templates_dir", "not a directory: " + dir.string());
  TemplateStore store;
  store.dir_ = dir;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string name = entry.path().stem().string();
    store.templates_.emplace(name, parse_template(name, text));
  }
  return store;
}

const TemplateStore& TemplateStore::defaults() {
  static const TemplateStore store = [] {
    const char* env = std::getenv("SEMSTEER_TEMPLATE_DIR");
    return load(env && *env ? std::filesystem::path(env) : std::filesystem::path(SEMSTEER_DEFAULT_TEMPLATE_DIR));
  }();
  return store;
}

const PromptTemplate& TemplateStore::get(std::string_view name) const {
  auto it = templates_.find(std::string(name));
  if (it == templates_.end()) {
    throw ConfigError("templates_dir", "template '" + std::string(name) + "' not found in " + dir_.string());
  }
  return it->second;
}

}  // namespace semsteer
