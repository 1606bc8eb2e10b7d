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

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdm {

enum class ErrorCode {
  MalformedRle,
  DimensionMismatch,
  MissingScore,
  ParseError,
  InvariantViolation,
  AdapterFailure,
  EmptyMask,
  ZeroNormRow,
  DimMismatch,
  MagicMismatch,
  IdMismatch,
  UnnormalizableBox,
  TooManyClasses,
  ClassListMismatch,
  UnknownImage,
  UnsortedInput,
  SizeMismatch,
  ValueOutOfRange,
  ConfigError,
  IoError,
  InvalidArgument,
  UnknownSession,
  NothingMatched,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// All engine failures carry a machine-readable code; what() names the code
// and the offending entity.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sdm
