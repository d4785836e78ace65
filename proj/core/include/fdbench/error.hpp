#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdbench {

// Every failure the toolkit reports carries one of these codes. The CLI
// prints the code name in its machine-readable error JSON, so the names
// returned by to_string() are stable.
enum class ErrorCode {
  kIo,
  kMissingFile,
  kManifestParse,
  kUnsupportedVersion,
  kMissingTensor,
  kShapeMismatch,
  kNonFinite,
  kLabelOutOfRange,
  kInvalidSplit,
  kInvalidField,
  kInvalidArgument,
  kEmptyInput,
  kLengthMismatch,
  kMissingEmbeddings,
  kMissingLastLayer,
  kEmptyClass,
  kRequirementUnmet,
  kUnknownScore,
  kDegenerateClasses,
  kConfidenceOutOfRange,
  kNotPositiveSemidefinite,
  kDegenerateProbabilities,
  kDiverged,
  kConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

}  // namespace fdbench
