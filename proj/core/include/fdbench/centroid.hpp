#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdbench/artifact.hpp"

namespace fdbench {

// Post-hoc stand-in for DUQ's distance score: per-class mean embeddings and
// an RBF kernel around the predicted class centroid. Reported as
// "centroid-rbf", never as DUQ, since no RBF model is trained.
struct CentroidModel {
  std::size_t dim = 0;
  std::vector<double> centroids;  // [n_classes x dim]
  double length_scale = 1.0;      // median pairwise centroid distance

  std::size_t n_classes() const { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const double> centroid(std::size_t c) const {
    return std::span<const double>(centroids).subspan(c * dim, dim);
  }
};

CentroidModel fit_centroids(const PredictionArtifact& train);

// exp(-||e - mu_pred||^2 / (2 sigma^2)), in (0, 1].
double centroid_score(const CentroidModel& model, std::span<const float> embedding,
                      int predicted_class);

}  // namespace fdbench
