// Copyright 2026 The SDM Engine Authors
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

#include <filesystem>
#include <string>
#include <vector>

namespace sdm {

struct CommandResult {
  int exit_code = 0;
  std::string output;  // merged stdout + stderr
};

// Runs `command arg1 arg2 ...` through the shell; arguments are quoted, the
// command string is used verbatim so it may carry its own flags.
CommandResult run_command(const std::string& command, const std::vector<std::string>& args);

std::string shell_quote(const std::string& arg);

// Fresh directory under the system temp dir (or `parent` when given).
std::filesystem::path make_scratch_dir(const std::string& prefix,
                                       const std::filesystem::path& parent = {});

}  // namespace sdm
