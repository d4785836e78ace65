#include "fdbench/centroid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdbench/error.hpp"

namespace fdbench {

CentroidModel fit_centroids(const PredictionArtifact& train) {
  if (!train.has_embeddings()) {
    throw Error(ErrorCode::kMissingEmbeddings,
                "centroid-rbf requires penultimate-layer embeddings in the train split");
  }
  const std::size_t dim = train.embed_dim;
  const std::size_t n_classes = train.n_classes;
  CentroidModel model;
  model.dim = dim;
  model.centroids.assign(n_classes * dim, 0.0);
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t i = 0; i < train.n_samples; ++i) {
    const auto c = static_cast<std::size_t>(train.labels[i]);
    const auto e = train.embedding(i);
    for (std::size_t k = 0; k < dim; ++k) model.centroids[c * dim + k] += e[k];
    ++counts[c];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorCode::kEmptyClass,
                  "class " + std::to_string(c) + " has no training points for centroid-rbf");
    }
    for (std::size_t k = 0; k < dim; ++k) {
      model.centroids[c * dim + k] /= static_cast<double>(counts[c]);
    }
  }

  std::vector<double> distances;
  for (std::size_t a = 0; a < n_classes; ++a) {
    for (std::size_t b = a + 1; b < n_classes; ++b) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = model.centroids[a * dim + k] - model.centroids[b * dim + k];
        sq += diff * diff;
      }
      distances.push_back(std::sqrt(sq));
    }
  }
  std::sort(distances.begin(), distances.end());
  const std::size_t m = distances.size();
  model.length_scale =
      m % 2 == 1 ? distances[m / 2] : 0.5 * (distances[m / 2 - 1] + distances[m / 2]);
  if (!(model.length_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "class centroids coincide; RBF length scale would be zero");
  }
  return model;
}

double centroid_score(const CentroidModel& model, std::span<const float> embedding,
                      int predicted_class) {
  if (embedding.size() != model.dim) {
    throw Error(ErrorCode::kLengthMismatch, "centroid-rbf query has the wrong dimension");
  }
  if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= model.n_classes()) {
    throw Error(ErrorCode::kInvalidArgument, "centroid-rbf predicted class out of range");
  }
  const auto mu = model.centroid(static_cast<std::size_t>(predicted_class));
  double sq = 0.0;
  for (std::size_t k = 0; k < model.dim; ++k) {
    const double diff = static_cast<double>(embedding[k]) - mu[k];
    sq += diff * diff;
  }
  return std::exp(-sq / (2.0 * model.length_scale * model.length_scale));
}

}  // namespace fdbench
