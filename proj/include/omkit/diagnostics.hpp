#pragma once

#include <functional>
#include <string_view>

namespace omkit {

// Non-fatal modelling warnings (e.g. validity conditions that are documented but
// not enforced). The default handler prints each distinct message once to stderr.
using WarningHandler = std::function<void(std::string_view)>;

// Installs a handler and returns the previous one. Passing an empty function
// restores the default handler.
WarningHandler set_warning_handler(WarningHandler handler);

void emit_warning(std::string_view message);

}  // namespace omkit
