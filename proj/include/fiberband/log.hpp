#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace fiberband::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from FIBERBAND_LOG (error|warn|info|debug), default warn.
inline Level& threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("FIBERBAND_LOG");
    if (!env) return Level::warn;
    if (!std::strcmp(env, "error")) return Level::error;
    if (!std::strcmp(env, "info")) return Level::info;
    if (!std::strcmp(env, "debug")) return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

inline void vwrite(Level lvl, const char* tag, const char* fmt, std::va_list ap) {
  if (lvl > threshold()) return;
  std::fprintf(stderr, "fiberband %s: ", tag);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
}

#define FIBERBAND_LOG_FN(name, level)                       \
  inline void name(const char* fmt, ...) {                  \
    std::va_list ap;                                        \
    va_start(ap, fmt);                                      \
    vwrite(Level::level, #level, fmt, ap);                  \
    va_end(ap);                                             \
  }

FIBERBAND_LOG_FN(error, error)
FIBERBAND_LOG_FN(warn, warn)
FIBERBAND_LOG_FN(info, info)
FIBERBAND_LOG_FN(debug, debug)

#undef FIBERBAND_LOG_FN

}  // namespace fiberband::log
