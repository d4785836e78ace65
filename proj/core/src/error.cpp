#include "fdbench/error.hpp"

namespace fdbench {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kManifestParse: return "manifest_parse_error";
    case ErrorCode::kUnsupportedVersion: return "unsupported_format_version";
    case ErrorCode::kMissingTensor: return "missing_tensor";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNonFinite: return "non_finite_value";
    case ErrorCode::kLabelOutOfRange: return "label_out_of_range";
    case ErrorCode::kInvalidSplit: return "invalid_split";
    case ErrorCode::kInvalidField: return "invalid_field";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kMissingEmbeddings: return "missing_embeddings";
    case ErrorCode::kMissingLastLayer: return "missing_last_layer";
    case ErrorCode::kEmptyClass: return "empty_class";
    case ErrorCode::kRequirementUnmet: return "requirement_unmet";
    case ErrorCode::kUnknownScore: return "unknown_score";
    case ErrorCode::kDegenerateClasses: return "degenerate_class_counts";
    case ErrorCode::kConfidenceOutOfRange: return "confidence_out_of_range";
    case ErrorCode::kNotPositiveSemidefinite: return "not_positive_semidefinite";
    case ErrorCode::kDegenerateProbabilities: return "degenerate_probabilities";
    case ErrorCode::kDiverged: return "training_diverged";
    case ErrorCode::kConfig: return "config_error";
  }
  return "unknown_error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace fdbench
