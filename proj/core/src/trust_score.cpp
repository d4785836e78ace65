#include "fdbench/trust_score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fdbench/error.hpp"

namespace fdbench {

TrustModel::TrustModel(std::size_t dim, std::size_t n_classes, std::span<const float> points,
                       std::span<const std::int32_t> labels)
    : dim_(dim), class_points_(n_classes) {
  if (dim == 0) throw Error(ErrorCode::kMissingEmbeddings, "TrustScore needs embeddings (D > 0)");
  if (points.size() != labels.size() * dim) {
    throw Error(ErrorCode::kLengthMismatch, "TrustModel points/labels size mismatch");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "TrustModel label out of range");
    }
    auto& bucket = class_points_[static_cast<std::size_t>(label)];
    for (std::size_t k = 0; k < dim; ++k) {
      const float v = points[i * dim + k];
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "TrustModel point not finite");
      bucket.push_back(static_cast<double>(v));
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_points_[c].empty()) {
      throw Error(ErrorCode::kEmptyClass,
                  "class " + std::to_string(c) + " has no training points for TrustScore");
    }
  }
}

std::size_t TrustModel::size() const noexcept {
  std::size_t total = 0;
  for (const auto& bucket : class_points_) total += bucket.size() / dim_;
  return total;
}

double TrustModel::nearest_squared(std::size_t c, std::span<const float> embedding) const {
  const auto& bucket = class_points_[c];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t offset = 0; offset < bucket.size(); offset += dim_) {
    double sq = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double diff = static_cast<double>(embedding[k]) - bucket[offset + k];
      sq += diff * diff;
      if (sq >= best) break;
    }
    best = std::min(best, sq);
  }
  return best;
}

double TrustModel::score(std::span<const float> embedding, int predicted_class) const {
  if (embedding.size() != dim_) {
    throw Error(ErrorCode::kLengthMismatch, "TrustScore query has the wrong dimension");
  }
  if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= n_classes()) {
    throw Error(ErrorCode::kInvalidArgument, "TrustScore predicted class out of range");
  }
  const auto pred = static_cast<std::size_t>(predicted_class);
  const double d_pred = std::sqrt(nearest_squared(pred, embedding));
  double other_sq = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n_classes(); ++c) {
    if (c != pred) other_sq = std::min(other_sq, nearest_squared(c, embedding));
  }
  const double d_other = std::sqrt(other_sq);
  if (d_pred == 0.0) return d_other == 0.0 ? 1.0 : kTrustScoreCap;
  return std::min(d_other / d_pred, kTrustScoreCap);
}

TrustModel fit_trustscore(const PredictionArtifact& train) {
  if (!train.has_embeddings()) {
    throw Error(ErrorCode::kMissingEmbeddings,
                "trustscore requires penultimate-layer embeddings in the train split");
  }
  return TrustModel(train.embed_dim, train.n_classes, train.embeddings, train.labels);
}

}  // namespace fdbench
