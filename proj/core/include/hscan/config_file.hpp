#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace hscan {

/// Flat `key=value` configuration. Blank lines and lines starting with '#'
/// are ignored; keys and values are trimmed. Later keys override earlier.
class ConfigMap {
 public:
  ConfigMap() = default;
  static ConfigMap parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigMap load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  /// Directory of the file this map was loaded from (for relative paths).
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::filesystem::path resolve_path(const std::string& key) const;

  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace hscan
