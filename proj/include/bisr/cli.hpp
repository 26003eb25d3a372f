/* Copyright 2026 The BiSR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <iosfwd>
#include <string>

namespace bisr {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `bisr` tool. Subcommands: simulate, train, eval,
/// count, ste-analyze, pack-bench. `--config FILE` supplies key=value
/// defaults (one per line, keys are long flag names); flags given on the
/// command line win.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bisr
