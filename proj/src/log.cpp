#include "imbalkit/log.hpp"

#include <iostream>
#include <mutex>

namespace imbalkit {
namespace {

std::mutex& log_mutex() {
  static std::mutex mutex;
  return mutex;
}

std::vector<std::string>& entries() {
  static std::vector<std::string> warnings;
  return warnings;
}

bool& echo_flag() {
  static bool echo = false;
  return echo;
}

}  // namespace

void log_warning(const std::string& message) {
  std::lock_guard lock(log_mutex());
  entries().push_back(message);
  if (echo_flag()) std::cerr << "warning: " << message << '\n';
}

std::vector<std::string> drain_warnings() {
  std::lock_guard lock(log_mutex());
  std::vector<std::string> out;
  out.swap(entries());
  return out;
}

std::vector<std::string> peek_warnings() {
  std::lock_guard lock(log_mutex());
  return entries();
}

void set_warning_echo(bool echo_to_stderr) {
  std::lock_guard lock(log_mutex());
  echo_flag() = echo_to_stderr;
}

}  // namespace imbalkit
