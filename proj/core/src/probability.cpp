#include "fdbench/probability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdbench/error.hpp"

namespace fdbench {

ProbabilityVector ProbabilityVector::from_values(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "empty probability vector");
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "probability entry outside [0,1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  return ProbabilityVector(std::move(values));
}

namespace {

template <typename T>
std::vector<double> softmax_values(std::span<const T> logits) {
  if (logits.empty()) throw Error(ErrorCode::kInvalidArgument, "softmax of an empty vector");
  double max_logit = -HUGE_VAL;
  for (T v : logits) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "softmax input is not finite");
    max_logit = std::max(max_logit, static_cast<double>(v));
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(static_cast<double>(logits[c]) - max_logit);
    total += out[c];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

ProbabilityVector softmax(std::span<const double> logits) {
  return ProbabilityVector(softmax_values(logits));
}

ProbabilityVector softmax(std::span<const float> logits) {
  std::vector<double> widened(logits.begin(), logits.end());
  return softmax(std::span<const double>(widened));
}

ProbabilityVector aggregate_passes(std::span<const float> logits, std::size_t n_passes) {
  if (n_passes == 0) throw Error(ErrorCode::kEmptyInput, "aggregate_passes needs at least one pass");
  if (logits.size() % n_passes != 0 || logits.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "logit block is not a whole number of passes");
  }
  const std::size_t n_classes = logits.size() / n_passes;
  if (n_passes == 1) return softmax(logits);

  std::vector<double> per_pass(n_passes * n_classes);
  for (std::size_t t = 0; t < n_passes; ++t) {
    const auto p = softmax_values(logits.subspan(t * n_classes, n_classes));
    std::copy(p.begin(), p.end(), per_pass.begin() + static_cast<std::ptrdiff_t>(t * n_classes));
  }
  std::vector<double> column(n_passes);
  std::vector<double> mean(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t t = 0; t < n_passes; ++t) column[t] = per_pass[t * n_classes + c];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    mean[c] = sum / static_cast<double>(n_passes);
  }
  return ProbabilityVector(std::move(mean));
}

int predict_class(const ProbabilityVector& probs, std::optional<double> binary_threshold) {
  if (binary_threshold) {
    if (probs.size() != 2) {
      throw Error(ErrorCode::kInvalidArgument,
                  "binary threshold given for a " + std::to_string(probs.size()) + "-class task");
    }
    return probs[1] >= *binary_threshold ? 1 : 0;
  }
  const auto values = probs.values();
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

PredictionRecord make_record(ProbabilityVector probs, std::optional<double> binary_threshold) {
  PredictionRecord record;
  record.predicted_class = predict_class(probs, binary_threshold);
  record.confidence = probs[static_cast<std::size_t>(record.predicted_class)];
  record.probs = std::move(probs);
  return record;
}

}  // namespace fdbench
