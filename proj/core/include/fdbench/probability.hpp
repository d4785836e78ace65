#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fdbench {

// A point on the probability simplex: entries in [0,1] summing to 1.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  // Validates entries and the unit sum (tolerance 1e-6); throws
  // Error(kInvalidArgument) otherwise.
  static ProbabilityVector from_values(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t c) const { return values_[c]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  explicit ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {}
  friend ProbabilityVector softmax(std::span<const double> logits);
  friend ProbabilityVector aggregate_passes(std::span<const float> logits, std::size_t n_passes);

  std::vector<double> values_;
};

// Max-subtracted softmax. Throws Error(kNonFinite) on NaN/Inf input.
ProbabilityVector softmax(std::span<const double> logits);
ProbabilityVector softmax(std::span<const float> logits);

// Mean of per-pass softmax vectors. logits is [n_passes x C] row-major.
// The per-class sum runs over sorted terms, so the result is bitwise
// independent of pass order.
ProbabilityVector aggregate_passes(std::span<const float> logits, std::size_t n_passes);

// Argmax (lowest index on ties), or for binary tasks with a threshold:
// class 1 iff p1 >= threshold.
int predict_class(const ProbabilityVector& probs,
                  std::optional<double> binary_threshold = std::nullopt);

struct PredictionRecord {
  int predicted_class = 0;
  double confidence = 0.0;  // softmax output of the predicted class
  ProbabilityVector probs;
};

PredictionRecord make_record(ProbabilityVector probs,
                             std::optional<double> binary_threshold = std::nullopt);

}  // namespace fdbench
