#include "svgp/cli/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace svgp::cli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] void config_error(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.hash_ = fnv1a(text);
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hashpos = line.find('#');
    if (hashpos != std::string::npos) line = line.substr(0, hashpos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        config_error(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  long version = cfg.get_int("", "config_version", -1);
  if (version != 1) config_error("missing or unsupported config_version (expected 1)");
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    config_error("missing [" + section + "] " + key);
  return s->second.at(key);
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? get_str(section, key) : fallback;
}

double Config::get_num(const std::string& section, const std::string& key) const {
  const std::string v = get_str(section, key);
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("[" + section + "] " + key + " is not a number: " + v);
  }
}

double Config::get_num(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_num(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  double d = get_num(section, key);
  long l = static_cast<long>(d);
  if (static_cast<double>(l) != d) config_error("[" + section + "] " + key + " must be an integer");
  return l;
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_str(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  config_error("[" + section + "] " + key + " is not a boolean: " + v);
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
  std::string v = get_str(section, key);
  std::vector<std::string> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) config_error("[" + section + "] " + key + " is an empty list");
  return out;
}

std::vector<double> Config::get_num_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_list(section, key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      config_error("[" + section + "] " + key + " has a non-numeric entry: " + s);
    }
  }
  return out;
}

std::vector<long> Config::get_int_list(const std::string& section, const std::string& key) const {
  std::vector<long> out;
  for (double d : get_num_list(section, key)) out.push_back(static_cast<long>(d));
  return out;
}

std::string Config::hash_hex() const {
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_));
  return std::string(buf);
}

}  // namespace svgp::cli
