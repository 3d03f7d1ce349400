#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gaitnet {

// Flat key=value configuration with '#' comments. Keys are validated against
// the registry of known keys; unknown keys are hard errors.
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<config>");

  void validate_keys(const std::vector<std::string>& known) const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          const std::vector<std::uint64_t>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace gaitnet
