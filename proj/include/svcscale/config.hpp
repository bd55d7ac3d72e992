#pragma once

#include "svcscale/types.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace svcscale {

// Flat `key = value` configuration with '#' comments; list values are
// comma-separated, bandwidth triples colon-separated. Keys are validated
// against a closed schema; unknown keys are errors.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse(const std::string& text);

  void require_known_keys(const std::set<std::string>& allowed) const;
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const;
  // "a:b:c, d:e:f" -> [[a,b,c],[d,e,f]]
  std::vector<std::array<double, 3>> get_triple_list(
      const std::string& key, const std::vector<std::array<double, 3>>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace svcscale
