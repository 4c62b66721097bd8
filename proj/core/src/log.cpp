#include "pcmp/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace pcmp {

void configure_logging_from_env() {
  // stdout is reserved for command output (eval prints JSON there)
  if (!spdlog::get("pcmp")) spdlog::set_default_logger(spdlog::stderr_color_mt("pcmp"));
  const char* raw = std::getenv("PCMP_LOG");
  std::string_view level = raw ? raw : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace pcmp
