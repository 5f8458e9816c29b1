#include "hscan/config_file.hpp"

#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

ConfigMap ConfigMap::parse(const std::string& text, const std::string& origin) {
  ConfigMap config;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(origin, i + 1, "expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw FormatError(origin, i + 1, "empty key");
    config.values_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return config;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InputError(fmt::format("config file not found: {}", path.string()));
  }
  ConfigMap config = parse(read_file(path), path.string());
  config.base_dir_ = path.parent_path();
  return config;
}

std::optional<std::string> ConfigMap::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigMap::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
  const auto raw = get(key);
  if (!raw) return fallback;
  const auto value = parse_int(*raw);
  if (!value) throw InputError(fmt::format("config key '{}' expects an integer, got '{}'", key, *raw));
  return *value;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto raw = get(key);
  if (!raw) return fallback;
  const auto value = parse_double(*raw);
  if (!value) throw InputError(fmt::format("config key '{}' expects a number, got '{}'", key, *raw));
  return *value;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto raw = get(key);
  if (!raw) return fallback;
  const std::string v = to_lower_ascii(*raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError(fmt::format("config key '{}' expects a boolean, got '{}'", key, *raw));
}

std::filesystem::path ConfigMap::resolve_path(const std::string& key) const {
  const auto raw = get(key);
  if (!raw || raw->empty()) return {};
  std::filesystem::path p(*raw);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

std::string ConfigMap::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{}={}\n", k, v);
  return out;
}

}  // namespace hscan
