#pragma once

namespace guidebot {

/// Sets the global log level from GUIDEBOT_LOG (error, warn, info, debug;
/// default warn). Unknown values fall back to the default with a warning.
void init_logging();

}  // namespace guidebot
