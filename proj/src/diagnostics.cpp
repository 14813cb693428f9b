#include "omkit/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace omkit {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

void default_handler(std::string_view message) {
  static std::set<std::string, std::less<>> seen;
  if (seen.find(message) != seen.end()) return;
  seen.emplace(message);
  std::cerr << "warning: " << message << '\n';
}

WarningHandler& current_handler() {
  static WarningHandler handler = default_handler;
  return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler previous = std::move(current_handler());
  current_handler() = handler ? std::move(handler) : WarningHandler(default_handler);
  return previous;
}

void emit_warning(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  current_handler()(message);
}

}  // namespace omkit
