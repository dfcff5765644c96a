#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluidrl {

// Flat key = value configuration. Keys are validated against the preset's
// key set before any work starts, so a typo fails fast instead of training
// with a silently ignored option.
class Config {
 public:
  Config() = default;

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }
  // Keeps string literals away from the bool overload.
  void set(const std::string& key, const char* value) {
    values_[key] = value;
  }
  void set(const std::string& key, double v) { set(key, format_double(v)); }
  void set(const std::string& key, int v) { set(key, std::to_string(v)); }
  void set(const std::string& key, bool v) {
    set(key, std::string(v ? "true" : "false"));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_str(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  int get_int(const std::string& key) const {
    return parse_int(key, get_str(key));
  }
  int get_int(const std::string& key, int dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_str(key));
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get_str(key);
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::runtime_error("config: key '" + key + "' is not a bool: " + v);
  }
  bool get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  // Comma-separated integer list, e.g. "4,12".
  std::vector<int> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& items() const { return values_; }

  // Throws listing every key not in `known`.
  void validate_keys(const std::vector<std::string>& known) const;

  // Parses `key = value` lines; '#' starts a comment, blank lines ignored.
  static Config parse(const std::string& text);
  static Config load_file(const std::string& path);
  std::string serialize() const;

 private:
  static std::string format_double(double v);
  static int parse_int(const std::string& key, const std::string& v);
  static double parse_double(const std::string& key, const std::string& v);

  std::map<std::string, std::string> values_;
};

}  // namespace fluidrl
