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

#include "sdm/process.hpp"

#include <sys/wait.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <random>

#include <unistd.h>

#include "sdm/error.hpp"

namespace sdm {

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

CommandResult run_command(const std::string& command, const std::vector<std::string>& args) {
  std::string line = command;
  for (const auto& a : args) line += " " + shell_quote(a);
  line += " 2>&1";
  std::FILE* pipe = ::popen(line.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::AdapterFailure, "cannot spawn: " + command);
  CommandResult result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (status == -1) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else {
    result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  }
  return result;
}

std::filesystem::path make_scratch_dir(const std::string& prefix,
                                       const std::filesystem::path& parent) {
  static std::atomic<unsigned> counter{0};
  const auto base = parent.empty() ? std::filesystem::temp_directory_path() : parent;
  std::filesystem::create_directories(base);
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto dir = base / (prefix + "-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter++) + "-" + std::to_string(rd() % 100000));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw Error(ErrorCode::IoError, "cannot create scratch dir under " + base.string());
}

}  // namespace sdm
