#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace fairgrade::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("FAIRGRADE_LOG");
    if (env == nullptr) return Level::Info;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Info;
  }();
  return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
  if (lvl > threshold()) return;
  const char* tag = lvl == Level::Error ? "error" : lvl == Level::Info ? "info" : "debug";
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void error(const std::string& msg) { emit(Level::Error, msg); }
inline void info(const std::string& msg) { emit(Level::Info, msg); }
inline void debug(const std::string& msg) { emit(Level::Debug, msg); }

}  // namespace fairgrade::log
