#include "g2d/log.hpp"

#include <atomic>

namespace g2d::log {

namespace {
std::atomic<Level> current{Level::warn};
}

Level level() { return current.load(std::memory_order_relaxed); }
void set_level(Level l) { current.store(l, std::memory_order_relaxed); }

}  // namespace g2d::log
