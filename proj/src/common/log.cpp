// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/common/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "pvlab/common/errors.hpp"

namespace pvlab {

std::string dimension_message(const std::string& what, std::size_t expected,
                              std::size_t actual) {
  return what + ": expected " + std::to_string(expected) + ", got " +
         std::to_string(actual);
}

namespace log {
namespace {

Level initial_level() {
  if (const char* env = std::getenv("PVLAB_LOG")) {
    const std::string v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    if (v == "warn") return Level::warn;
    if (v == "error") return Level::error;
    if (v == "off") return Level::off;
  }
  return Level::warn;
}

std::atomic<int> g_level{static_cast<int>(initial_level())};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (static_cast<int>(lvl) < g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[pvlab " << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(static_cast<int>(level)); }
Level level() { return static_cast<Level>(g_level.load()); }

void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void warn(std::string_view msg) {
  ++g_warnings;
  emit(Level::warn, "warn", msg);
}
void error(std::string_view msg) { emit(Level::error, "error", msg); }

std::size_t warning_count() { return g_warnings.load(); }

}  // namespace log
}  // namespace pvlab
