#ifndef DPPO_LOG_HPP_
#define DPPO_LOG_HPP_

#include <string>

namespace dppo {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Active level comes from the DPPO_LOG environment variable
// (error|warn|info|debug); defaults to info. Messages go to stderr.
LogLevel log_level();
void log_message(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log_message(LogLevel::kError, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::kWarn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::kInfo, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::kDebug, m); }

}  // namespace dppo

#endif  // DPPO_LOG_HPP_
