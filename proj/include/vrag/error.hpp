// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrag {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kIo,
  kBadMagic,
  kDimensionOverflow,
  kChecksumMismatch,
  kTruncated,
  kVersionMismatch,
  kEmptyInput,
};

std::string_view to_string(ErrorCode code);

// All engine failures are reported through this exception; callers that need
// to distinguish failure classes switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vrag
