/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "diarl/error.hpp"

namespace diarl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "CONFIG";
    case ErrorCode::kInput: return "BAD_INPUT";
    case ErrorCode::kState: return "STATE";
    case ErrorCode::kProtocol: return "PROTOCOL";
    case ErrorCode::kStale: return "STALE";
    case ErrorCode::kUnknownSegment: return "UNKNOWN_SEGMENT";
    case ErrorCode::kUnknownLabel: return "UNKNOWN_LABEL";
    case ErrorCode::kDuplicate: return "DUPLICATE";
    case ErrorCode::kIo: return "IO";
  }
  return "INTERNAL";
}

}  // namespace diarl
