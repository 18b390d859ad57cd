#pragma once

#include <iostream>
#include <sstream>

namespace pbs::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from the PBS_LOG environment variable (error|warn|info|debug),
/// default warn. Read once.
Level threshold() noexcept;
void emit(Level level, const std::string& message);

}  // namespace pbs::log

#define PBS_LOG_AT(level, expr)                                          \
    do {                                                                 \
        if (static_cast<int>(level) <= static_cast<int>(::pbs::log::threshold())) { \
            std::ostringstream pbs_log_os_;                              \
            pbs_log_os_ << expr;                                         \
            ::pbs::log::emit(level, pbs_log_os_.str());                  \
        }                                                                \
    } while (0)

#define PBS_LOG_WARN(expr) PBS_LOG_AT(::pbs::log::Level::Warn, expr)
#define PBS_LOG_INFO(expr) PBS_LOG_AT(::pbs::log::Level::Info, expr)
#define PBS_LOG_DEBUG(expr) PBS_LOG_AT(::pbs::log::Level::Debug, expr)
