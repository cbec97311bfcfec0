// Copyright 2026 The Waveflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "waveflow/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace waveflow::log {

namespace {

Level parse_level(const char* env) {
  if (env == nullptr) return Level::Info;
  const std::string s(env);
  if (s == "error") return Level::Error;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

struct State {
  std::shared_ptr<spdlog::logger> logger;
  Level level = Level::Info;
};

State& state() {
  static State s;
  static std::once_flag once;
  std::call_once(once, [] {
    s.level = parse_level(std::getenv("WAVEFLOW_LOG"));
    s.logger = spdlog::stderr_color_mt("waveflow");
    s.logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    switch (s.level) {
      case Level::Error: s.logger->set_level(spdlog::level::err); break;
      case Level::Info: s.logger->set_level(spdlog::level::info); break;
      case Level::Debug: s.logger->set_level(spdlog::level::debug); break;
    }
  });
  return s;
}

}  // namespace

void init() { state(); }
Level level() { return state().level; }

void error(std::string_view message) { state().logger->error("{}", message); }
void info(std::string_view message) { state().logger->info("{}", message); }
void debug(std::string_view message) { state().logger->debug("{}", message); }

}  // namespace waveflow::log
