#include "dppo/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace dppo {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("DPPO_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string value(env);
  if (value == "error") return LogLevel::kError;
  if (value == "warn") return LogLevel::kWarn;
  if (value == "info") return LogLevel::kInfo;
  if (value == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
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

std::mutex g_log_mutex;

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::fprintf(stderr, "[dppo %s] %s\n", level_tag(level), message.c_str());
}

}  // namespace dppo
