#pragma once

#include <spdlog/spdlog.h>

namespace textwalk {

// Library logger on stderr. Level comes from TEXTWALK_LOG
// (trace|debug|info|warn|error|off), default warn.
spdlog::logger& log();

}  // namespace textwalk
