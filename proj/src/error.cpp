// Copyright 2026 The Authors.
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

#include "lig/error.hpp"

namespace lig {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateQuery: return "DegenerateQuery";
    case ErrorCode::kInvalidRank: return "InvalidRank";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kOutOfBoundsBBox: return "OutOfBoundsBBox";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kTooFewImages: return "TooFewImages";
    case ErrorCode::kClassAbsentFromTrainSplit: return "ClassAbsentFromTrainSplit";
    case ErrorCode::kClassAbsentFromTestSplit: return "ClassAbsentFromTestSplit";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kPoolTooSmall: return "PoolTooSmall";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace lig
