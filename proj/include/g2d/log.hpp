#pragma once

#include <iostream>
#include <sstream>
#include <string_view>

namespace g2d::log {

enum class Level { quiet = 0, warn = 1, info = 2 };

Level level();
void set_level(Level level);

template <class... Args>
void warn(Args&&... args)
{
    if (level() < Level::warn) return;
    std::ostringstream os;
    os << "warning: ";
    (os << ... << args);
    std::clog << os.str() << '\n';
}

template <class... Args>
void info(Args&&... args)
{
    if (level() < Level::info) return;
    std::ostringstream os;
    (os << ... << args);
    std::clog << os.str() << '\n';
}

}  // namespace g2d::log
