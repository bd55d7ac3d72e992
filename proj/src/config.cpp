#include "svcscale/config.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace svcscale {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  return begin == std::string::npos ? "" : s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("non-numeric value '" + s + "' for key " + key);
  return v;
}

long parse_int(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("non-integer value '" + s + "' for key " + key);
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(ss, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineNo) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(lineNo));
    if (cfg.values_.count(key)) throw ConfigError("duplicate config key: " + key);
    cfg.values_[key] = value;
  }
  return cfg;
}

void KeyValueConfig::require_known_keys(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_)
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + key);
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  return parse_int(get_string(key), key);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return parse_double(get_string(key), key);
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split(get_string(key), ','))
    if (!item.empty()) out.push_back(parse_double(item, key));
  if (out.empty()) throw ConfigError("empty list for key " + key);
  return out;
}

std::vector<long> KeyValueConfig::get_int_list(const std::string& key,
                                               const std::vector<long>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<long> out;
  for (const auto& item : split(get_string(key), ','))
    if (!item.empty()) out.push_back(parse_int(item, key));
  if (out.empty()) throw ConfigError("empty list for key " + key);
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  for (const auto& item : split(get_string(key), ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw ConfigError("empty list for key " + key);
  return out;
}

std::vector<std::array<double, 3>> KeyValueConfig::get_triple_list(
    const std::string& key, const std::vector<std::array<double, 3>>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::array<double, 3>> out;
  for (const auto& item : split(get_string(key), ',')) {
    if (item.empty()) continue;
    const auto parts = split(item, ':');
    if (parts.size() != 3)
      throw ConfigError("expected colon-separated triple in key " + key + ", got '" + item + "'");
    out.push_back({parse_double(parts[0], key), parse_double(parts[1], key),
                   parse_double(parts[2], key)});
  }
  if (out.empty()) throw ConfigError("empty list for key " + key);
  return out;
}

}  // namespace svcscale
