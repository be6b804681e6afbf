#include "mwopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mwopt {
namespace {

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(begin, end - begin);
}

std::string strip_comment(const std::string& line) {
  const std::size_t pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config config;
  config.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": empty section name");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(line_no) +
                            ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(origin + ":" + std::to_string(line_no) +
                            ": empty key");
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    config.values_[full_key] = value;
  }
  return config;
}

void Config::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("override must be section.key=value, got '" +
                          assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.empty()) throw ValidationError("override has empty key");
  values_[key] = value;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ValidationError(origin_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string text = get_string(key);
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ValidationError(origin_ + ": key '" + key +
                          "' is not a number: '" + text + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
  const std::string text = get_string(key);
  try {
    std::size_t used = 0;
    // Accept scientific notation for iteration counts (e.g. 1e6).
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    const long long rounded = static_cast<long long>(value + (value >= 0 ? 0.5 : -0.5));
    if (std::abs(value - static_cast<double>(rounded)) > 1e-9) {
      throw std::invalid_argument(text);
    }
    return rounded;
  } catch (const std::exception&) {
    throw ValidationError(origin_ + ": key '" + key +
                          "' is not an integer: '" + text + "'");
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string text = get_string(key);
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ValidationError(origin_ + ": key '" + key + "' is not a boolean: '" +
                        text + "'");
}

Vector Config::get_vector(const std::string& key) const {
  return parse_vector(get_string(key), origin_ + ": key '" + key + "'");
}

std::optional<double> Config::get_auto_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const std::string text = get_string(key);
  if (text == "auto") return std::nullopt;
  return get_double(key);
}

Vector parse_vector(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      std::string trimmed = trim(cell);
      if (trimmed == "inf") {
        values.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      const double value = std::stod(trimmed, &used);
      if (used != trimmed.size()) throw std::invalid_argument(trimmed);
      values.push_back(value);
    } catch (const std::exception&) {
      throw ValidationError(what + ": cannot parse vector element '" + cell + "'");
    }
  }
  if (values.empty()) throw ValidationError(what + ": empty vector");
  Vector result(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < result.size(); ++i) {
    result[i] = values[static_cast<std::size_t>(i)];
  }
  return result;
}

}  // namespace mwopt
