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

// Diagnostic logging to stderr. Level comes from WAVEFLOW_LOG (error, info, debug; default info).

#pragma once

#include <string_view>

namespace waveflow::log {

enum class Level { Error, Info, Debug };

/// Reads WAVEFLOW_LOG; unknown values fall back to info. Safe to call repeatedly.
void init();
Level level();

void error(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace waveflow::log
