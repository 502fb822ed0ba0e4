#include "guidebot/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace guidebot {

void init_logging() {
  auto logger = spdlog::get("guidebot");
  if (!logger) logger = spdlog::stderr_color_mt("guidebot");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("GUIDEBOT_LOG");
  if (env == nullptr) return;
  const std::string v(env);
  if (v == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (v == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (v == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (v == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("GUIDEBOT_LOG='{}' is not one of error, warn, info, debug", v);
  }
}

}  // namespace guidebot
