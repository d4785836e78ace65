#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fdbench/artifact.hpp"

namespace fdbench {

// Returned when the test point coincides with a training point of the
// predicted class but not with any point of another class.
inline constexpr double kTrustScoreCap = 1e12;

// Training embeddings grouped by true label. Queries are exact brute-force
// Euclidean nearest-neighbour scans.
class TrustModel {
 public:
  // points is [labels.size() x dim] row-major. Every class in [0, n_classes)
  // needs at least one point; throws Error(kEmptyClass) naming the class.
  TrustModel(std::size_t dim, std::size_t n_classes, std::span<const float> points,
             std::span<const std::int32_t> labels);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_classes() const noexcept { return class_points_.size(); }
  std::size_t class_size(std::size_t c) const { return class_points_[c].size() / dim_; }
  std::size_t size() const noexcept;

  // Distance ratio d(nearest other class) / d(nearest predicted class).
  double score(std::span<const float> embedding, int predicted_class) const;

 private:
  double nearest_squared(std::size_t c, std::span<const float> embedding) const;

  std::size_t dim_;
  std::vector<std::vector<double>> class_points_;
};

// Throws Error(kMissingEmbeddings) when the split has no embeddings.
TrustModel fit_trustscore(const PredictionArtifact& train);

inline double trustscore(const TrustModel& model, std::span<const float> embedding,
                         int predicted_class) {
  return model.score(embedding, predicted_class);
}

}  // namespace fdbench
