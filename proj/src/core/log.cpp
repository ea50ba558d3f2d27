#include "jf/core/log.hpp"

#include <iostream>
#include <mutex>

namespace jf {
namespace {

std::mutex g_mutex;

void default_sink(LogLevel level, std::string_view message) {
  if (level == LogLevel::info) return;
  std::cerr << (level == LogLevel::warning ? "warning: " : "error: ") << message << '\n';
}

LogSink& sink() {
  static LogSink s = default_sink;
  return s;
}

}  // namespace

LogSink set_log_sink(LogSink next) {
  std::lock_guard lock(g_mutex);
  LogSink prev = std::move(sink());
  sink() = next ? std::move(next) : LogSink(default_sink);
  return prev;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  sink()(level, message);
}

}  // namespace jf
