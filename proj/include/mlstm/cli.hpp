// Copyright 2026 The mlstm Authors.
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

#ifndef MLSTM_CLI_HPP
#define MLSTM_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace mlstm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,    // runtime failure not covered below
  kUsage = 2,      // unknown subcommand/option, missing or invalid option value
  kIoError = 3,    // unreadable input or unwritable output
  kDataError = 4,  // malformed input file or checkpoint
};

const char* version();

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlstm::cli

#endif  // MLSTM_CLI_HPP
