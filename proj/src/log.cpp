#include "relscene/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace relscene {

namespace {
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
}  // namespace

void warn(std::string_view msg) {
  if (!g_enabled.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled = enabled; }

}  // namespace relscene
