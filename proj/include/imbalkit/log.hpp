#pragma once

#include <string>
#include <vector>

namespace imbalkit {

// Process-wide run log. Library code records recoverable anomalies here
// (clamped parameters, degenerate statistics); the CLI copies them into the
// run manifest.
void log_warning(const std::string& message);
std::vector<std::string> drain_warnings();
std::vector<std::string> peek_warnings();
void set_warning_echo(bool echo_to_stderr);

}  // namespace imbalkit
