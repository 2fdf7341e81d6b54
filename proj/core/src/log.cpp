#include "sparsecv/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace sparsecv {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("CVX_L0_LOG");
  if (env == nullptr) return LogLevel::kWarn;
  std::string v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
  }
  return "?";
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() {
  static LogLevel level = parse_level();
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex());
  std::cerr << "[sparsecv:" << level_tag(level) << "] " << msg << "\n";
}

}  // namespace sparsecv
