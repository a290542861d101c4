#include "osnd/log.hpp"

#include <atomic>
#include <iostream>

namespace osnd {

namespace {
std::atomic<LogLevel> g_level{LogLevel::kInfo};
}

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load()) return;
  static constexpr const char* kTags[] = {"debug", "info", "warn", "error", ""};
  std::clog << '[' << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace osnd
