#pragma once

#include <functional>
#include <string>

namespace cellsynth::log {

using Sink = std::function<void(const std::string&)>;

void warn(const std::string& message);

/// Replace the warning sink (default: stderr). Returns the previous sink.
Sink set_warning_sink(Sink sink);

}  // namespace cellsynth::log
