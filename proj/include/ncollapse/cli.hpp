// Copyright 2026 The ncollapse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncollapse {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of `run_cli`.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,       // bad flags, unreadable input, numerical failure
  kExitAssumption = 2,  // hypothesis violated and --strict given
};

/// Parses a `start:stop:step` range (stop included up to rounding) or a single
/// number. Throws std::invalid_argument on malformed input or step <= 0.
std::vector<double> parse_range(const std::string& text);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Results go to `out` unless --output names a file.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncollapse
