#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mamba {

// Flat `key = value` configuration text. `#` starts a comment, blank lines
// are ignored. Later assignments win. Used for run configs, config snapshots
// and the task-distribution description files.
class KeyVal {
public:
  KeyVal() = default;

  static KeyVal parse_file(const std::string& path);
  // `origin` is used in error messages ("<origin>:<line>: ...").
  static KeyVal parse_text(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  // Comma-separated list of numbers, e.g. "10,100,1000".
  std::vector<double> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // Canonical serialized form: sorted `key = value` lines.
  std::string to_text() const;

private:
  std::map<std::string, std::string> values_;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mamba
