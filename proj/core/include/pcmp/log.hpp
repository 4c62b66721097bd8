#pragma once

#include <spdlog/spdlog.h>

namespace pcmp {

// Reads PCMP_LOG (error|warn|info|debug) and applies it to the default
// spdlog logger, which writes to stderr. Unknown or missing values leave the level at info.
void configure_logging_from_env();

}  // namespace pcmp
