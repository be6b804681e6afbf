#include "mwopt/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mwopt::log {
namespace {

Level parse_level(const char* text) {
  if (text == nullptr) return Level::warn;
  const std::string value(text);
  if (value == "debug") return Level::debug;
  if (value == "info") return Level::info;
  if (value == "warn") return Level::warn;
  if (value == "error") return Level::error;
  if (value == "off") return Level::off;
  return Level::warn;
}

Level& threshold_storage() {
  static Level level = parse_level(std::getenv("MWOPT_LOG"));
  return level;
}

const char* label(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "?";
  }
}

}  // namespace

Level threshold() { return threshold_storage(); }

void set_threshold(Level level) { threshold_storage() = level; }

void write(Level level, const std::string& message) {
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  std::cerr << "[mwopt:" << label(level) << "] " << message << '\n';
}

}  // namespace mwopt::log
