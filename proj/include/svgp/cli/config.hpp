#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svgp::cli {

// Versioned INI-style configuration: `[section]` headers over flat
// `key = value` pairs, `#` comments, comma-separated lists.
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  double get_num(const std::string& section, const std::string& key) const;
  double get_num(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_num_list(const std::string& section, const std::string& key) const;
  std::vector<long> get_int_list(const std::string& section, const std::string& key) const;

  // 64-bit FNV-1a of the raw text; stamped into every trace file.
  std::uint64_t hash() const { return hash_; }
  std::string hash_hex() const;

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::uint64_t hash_ = 0;
};

}  // namespace svgp::cli
