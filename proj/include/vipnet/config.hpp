#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vipnet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat "key = value" config text with dotted section keys
// (e.g. theta.mode = ema).  Command-line overrides win over file values.
class Config {
 public:
  Config() = default;

  static Config from_stream(std::istream& in) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      std::string t = trim(line);
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      c.values_[key] = val;
    }
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return from_stream(f);
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  void apply_override(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + kv);
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }
  double get_double(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      return std::stod(it->second);
    } catch (...) {
      throw ConfigError("config key '" + key + "': not a number: " +
                        it->second);
    }
  }
  long get_long(const std::string& key, long dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      return std::stol(it->second);
    } catch (...) {
      throw ConfigError("config key '" + key + "': not an integer: " +
                        it->second);
    }
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      return std::stoull(it->second);
    } catch (...) {
      throw ConfigError("config key '" + key + "': not an integer: " +
                        it->second);
    }
  }
  bool get_bool(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + it->second);
  }
  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stod(tok));
    if (out.empty())
      throw ConfigError("config key '" + key + "': empty list");
    return out;
  }
  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<std::string> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(tok);
    return out;
  }

  // Unknown keys are rejected, not ignored.
  void require_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      bool ok = false;
      for (const auto& kk : known)
        if (k == kk) {
          ok = true;
          break;
        }
      if (!ok) throw ConfigError("unknown config key: " + k);
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vipnet
