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

#include "sdm/error.hpp"

namespace sdm {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRle: return "MalformedRle";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::AdapterFailure: return "AdapterFailure";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::UnnormalizableBox: return "UnnormalizableBox";
    case ErrorCode::TooManyClasses: return "TooManyClasses";
    case ErrorCode::ClassListMismatch: return "ClassListMismatch";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::NothingMatched: return "NothingMatched";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace sdm
