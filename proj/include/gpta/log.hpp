#pragma once

#include <functional>
#include <string>

namespace gpta::log {

enum class Level { Debug, Info, Warn };

using Sink = std::function<void(Level, const std::string&)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink writes Info and Warn to stderr.
Sink set_sink(Sink sink);

void write(Level level, const std::string& msg);
inline void debug(const std::string& msg) { write(Level::Debug, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void warn(const std::string& msg) { write(Level::Warn, msg); }

}  // namespace gpta::log
