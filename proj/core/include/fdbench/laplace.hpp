#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdbench/artifact.hpp"
#include "fdbench/probability.hpp"

namespace fdbench {

// MAP estimate of the final affine layer, logits = weight * e + bias.
struct LastLayerMap {
  Eigen::MatrixXd weight;  // C x D
  Eigen::VectorXd bias;    // C
  std::string source;
};

// Reads last_weight/last_bias from an artifact. A missing bias becomes a
// zero vector and is recorded in `source`. Throws Error(kMissingLastLayer).
LastLayerMap last_layer_from(const PredictionArtifact& artifact);

struct LaplaceOptions {
  double prior_precision = 1.0;
  // Treat the bias as a Gaussian parameter too (features augmented with a
  // constant 1). Off by default: the bias stays at its MAP value.
  bool include_bias = false;
};

// Gaussian posterior over vec(W) (row-major, index c * D + d) with precision
// N * (B kron A) + prior_precision * I, held through the eigenbases of the
// two Kronecker factors. The (CD x CD) matrix is never formed.
class LaplacePosterior {
 public:
  LaplacePosterior(LastLayerMap map, Eigen::MatrixXd kron_a, Eigen::MatrixXd kron_b,
                   std::size_t n_train, LaplaceOptions options);

  const LastLayerMap& map() const noexcept { return map_; }
  const Eigen::MatrixXd& kron_a() const noexcept { return kron_a_; }
  const Eigen::MatrixXd& kron_b() const noexcept { return kron_b_; }
  const Eigen::VectorXd& eigenvalues_a() const noexcept { return eig_a_; }
  const Eigen::VectorXd& eigenvalues_b() const noexcept { return eig_b_; }
  double prior_precision() const noexcept { return options_.prior_precision; }
  bool include_bias() const noexcept { return options_.include_bias; }
  std::size_t n_train() const noexcept { return n_train_; }
  std::size_t n_classes() const { return static_cast<std::size_t>(map_.weight.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(kron_a_.rows()); }

  // Same curvature, different prior.
  LaplacePosterior with_prior_precision(double prior_precision) const;

  // Regression features: the embedding, plus a trailing 1 when the bias is
  // part of the posterior.
  Eigen::VectorXd features(std::span<const float> embedding) const;
  // Weights matching features(): W, or [W | b].
  Eigen::MatrixXd mean_weights() const;

  Eigen::VectorXd latent_mean(std::span<const float> embedding) const;
  Eigen::MatrixXd latent_covariance(std::span<const float> embedding) const;
  Eigen::VectorXd latent_variance(std::span<const float> embedding) const;
  // Variances after projecting out the all-ones logit direction.
  Eigen::VectorXd centred_latent_variance(std::span<const float> embedding) const;

  // Eigenvalues of the posterior covariance, all in (0, 1/prior_precision].
  Eigen::VectorXd covariance_eigenvalues() const;

  // Dense posterior covariance. Only for small problems and tests.
  Eigen::MatrixXd dense_covariance() const;

 private:
  LastLayerMap map_;
  Eigen::MatrixXd kron_a_;
  Eigen::MatrixXd kron_b_;
  Eigen::MatrixXd basis_a_;
  Eigen::MatrixXd basis_b_;
  Eigen::VectorXd eig_a_;
  Eigen::VectorXd eig_b_;
  std::size_t n_train_;
  LaplaceOptions options_;
};

// A = mean(e e^T) + 1e-6 * trace/dim * I, B = mean(diag(p) - p p^T) with
// p = softmax(W e + b) under the MAP weights.
LaplacePosterior fit_laplace(const PredictionArtifact& train, LastLayerMap map,
                             LaplaceOptions options = {});

// Probit approximation: softmax(f_c / sqrt(1 + pi/8 * var_c)), with var_c
// taken from the centred latent covariance.
ProbabilityVector laplace_predictive(const LaplacePosterior& posterior,
                                     std::span<const float> embedding);

// Laplace evidence of the training data up to a constant independent of
// the prior precision.
double log_marginal_likelihood(const LaplacePosterior& posterior,
                               const PredictionArtifact& train);

// Mean negative log-likelihood of the probit predictive on a split.
double predictive_nll(const LaplacePosterior& posterior, const PredictionArtifact& split);

enum class PriorSelection { kMarginalLikelihood, kValidationNll };

// Picks the grid value maximising the evidence (on train) or minimising the
// validation NLL; ties go to the first grid entry.
double select_prior_precision(const LaplacePosterior& fitted, const PredictionArtifact& train,
                              const PredictionArtifact& val, std::span<const double> grid,
                              PriorSelection criterion);

}  // namespace fdbench
