#pragma once

#include <functional>
#include <string>
#include <utility>

#include <fmt/format.h>

namespace svgforge::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

using Sink = std::function<void(Level, const std::string&)>;

// Process-wide sink. The default writes Warn and above to stderr.
void set_sink(Sink sink);
void set_level(Level level);
Level level();
void write(Level level, const std::string& message);

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args)
{
    if (level() <= Level::Warn)
        write(Level::Warn, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args)
{
    if (level() <= Level::Info)
        write(Level::Info, fmt::format(f, std::forward<Args>(args)...));
}

} // namespace svgforge::log
