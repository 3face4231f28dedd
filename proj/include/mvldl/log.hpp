#pragma once

#include <string>

namespace mvldl {

/// Verbosity from the MVLDL_LOG environment variable: unset/"0"/"off" keeps
/// quiet, "1"/"info" prints progress lines, "2"/"debug" adds per-iteration
/// detail. Output goes to stderr; stdout stays machine-readable.
enum class LogLevel { off = 0, info = 1, debug = 2 };

LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace mvldl
