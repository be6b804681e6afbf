#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mwopt/types.hpp"

namespace mwopt {

// Structured text config: `[section]` headers and `key = value` lines.
// `#` starts a comment (full-line or trailing).  Keys are looked up as
// "section.key".  Values keep their raw text; typed getters parse on demand.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  // Applies a "section.key=value" override (CLI --set).
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Parses "1,2.5,3" into a vector.
  Vector get_vector(const std::string& key) const;

  // "auto" (or a missing key) yields nullopt; otherwise the numeric value.
  std::optional<double> get_auto_double(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

Vector parse_vector(const std::string& text, const std::string& what);

}  // namespace mwopt
