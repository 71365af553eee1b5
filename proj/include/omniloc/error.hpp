#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omniloc {

enum class ErrorCode {
  kInvalidArgument,
  kDomain,
  kOutOfImage,
  kDimensionMismatch,
  kEmptyInput,
  kMissingPose,
  kInsufficientData,
  kLocalizationFailed,
  kNonFinite,
  kNoCorrespondences,
  kUnknownMode,
  kDuplicateId,
  kParse,
  kIo,
};

// Stable identifier printed by the CLI, e.g. "E_DOMAIN".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace omniloc
