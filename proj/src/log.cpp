#include "infosample/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace infosample::log {

namespace {
std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warning: return "warning";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "";
}
}  // namespace

void set_level(Level l) { g_level.store(l); }
Level level() { return g_level.load(); }

void write(Level l, std::string_view message) {
  if (l < g_level.load() || l == Level::Off) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[" << tag(l) << "] " << message << '\n';
}

}  // namespace infosample::log
