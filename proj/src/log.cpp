#include "pbs/log.hpp"

#include <cstdlib>
#include <string_view>

namespace pbs::log {

namespace {

Level parse(const char* text) noexcept {
    if (text == nullptr) return Level::Warn;
    const std::string_view v(text);
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
}

}  // namespace

Level threshold() noexcept {
    static const Level level = parse(std::getenv("PBS_LOG"));
    return level;
}

void emit(Level level, const std::string& message) {
    static constexpr std::string_view names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[pbs " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace pbs::log
