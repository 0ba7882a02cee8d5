// Copyright 2026 The BPM Authors. All Rights Reserved.
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

namespace bpm {

enum class ErrorKind {
  kDimensionMismatch,
  kEmptyCrop,
  kInvalidArgument,
  kEmptyInstruction,
  kSchemaViolation,
  kProviderUnavailable,
  kFixtureMiss,
  kLocalizationFailure,
  kEmptyBatch,
  kAlphaOutOfRange,
  kIdSetMismatch,
  kNoComparablePairs,
  kEmptyInput,
  kDegenerateVariance,
  kMissingDistractor,
  kShapeMismatch,
  kIo,
};

inline constexpr std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kEmptyCrop: return "EmptyCrop";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEmptyInstruction: return "EmptyInstruction";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::kFixtureMiss: return "FixtureMiss";
    case ErrorKind::kLocalizationFailure: return "LocalizationFailure";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::kIdSetMismatch: return "IdSetMismatch";
    case ErrorKind::kNoComparablePairs: return "NoComparablePairs";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kDegenerateVariance: return "DegenerateVariance";
    case ErrorKind::kMissingDistractor: return "MissingDistractor";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

/// Every engine failure carries a machine-readable kind. `detail` holds the
/// offending field name for schema violations and free text otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + detail),
        kind_(kind),
        detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace bpm
