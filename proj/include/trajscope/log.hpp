#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace trajscope {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Level from TRAJSCOPE_LOG (error|info|debug), default info. Messages go
/// to stderr; stdout is reserved for command summaries.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* e = std::getenv("TRAJSCOPE_LOG");
    if (e == nullptr) return LogLevel::kInfo;
    const std::string s(e);
    if (s == "error") return LogLevel::kError;
    if (s == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

template <typename... Args>
void log_at(LogLevel level, const char* tag, Args&&... args) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::ostringstream os;
  os << '[' << tag << "] ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}

template <typename... Args>
void log_error(Args&&... args) {
  log_at(LogLevel::kError, "error", std::forward<Args>(args)...);
}

template <typename... Args>
void log_info(Args&&... args) {
  log_at(LogLevel::kInfo, "info", std::forward<Args>(args)...);
}

template <typename... Args>
void log_debug(Args&&... args) {
  log_at(LogLevel::kDebug, "debug", std::forward<Args>(args)...);
}

}  // namespace trajscope
