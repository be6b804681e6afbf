#pragma once

#include <sstream>
#include <string>

namespace mwopt::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Current threshold; initialized once from the MWOPT_LOG environment variable
// (debug|info|warn|error|off, default warn).
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& message);

template <typename... Args>
void emit(Level level, Args&&... args) {
  if (level < threshold()) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <typename... Args>
void debug(Args&&... args) {
  emit(Level::debug, std::forward<Args>(args)...);
}
template <typename... Args>
void info(Args&&... args) {
  emit(Level::info, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(Args&&... args) {
  emit(Level::warn, std::forward<Args>(args)...);
}
template <typename... Args>
void error(Args&&... args) {
  emit(Level::error, std::forward<Args>(args)...);
}

}  // namespace mwopt::log
