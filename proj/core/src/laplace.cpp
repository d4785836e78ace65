#include "fdbench/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fdbench/error.hpp"

namespace fdbench {

namespace {

constexpr double kPsdTolerance = 1e-8;
constexpr double kJitterScale = 1e-6;

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * scale) {
    throw Error(ErrorCode::kNotPositiveSemidefinite,
                std::string("Kronecker factor ") + name + " is not symmetric");
  }
}

// Eigendecomposition with small negative eigenvalues (rounding) clamped to 0.
void decompose(const Eigen::MatrixXd& m, const char* name, Eigen::MatrixXd& basis,
               Eigen::VectorXd& eigenvalues) {
  require_symmetric(m, name);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveSemidefinite,
                std::string("eigendecomposition of ") + name + " failed");
  }
  eigenvalues = solver.eigenvalues();
  basis = solver.eigenvectors();
  const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  if (eigenvalues.minCoeff() < -kPsdTolerance * scale) {
    throw Error(ErrorCode::kNotPositiveSemidefinite,
                std::string("Kronecker factor ") + name + " has eigenvalue " +
                    std::to_string(eigenvalues.minCoeff()));
  }
  eigenvalues = eigenvalues.cwiseMax(0.0);
}

Eigen::VectorXd softmax_vector(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - peak).exp().matrix();
  return p / p.sum();
}

}  // namespace

LastLayerMap last_layer_from(const PredictionArtifact& artifact) {
  if (!artifact.has_last_layer()) {
    throw Error(ErrorCode::kMissingLastLayer,
                "laplace requires last_weight (C x D) in the artifact");
  }
  const auto c = static_cast<Eigen::Index>(artifact.n_classes);
  const auto d = static_cast<Eigen::Index>(artifact.embed_dim);
  LastLayerMap map;
  map.weight.resize(c, d);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      map.weight(i, k) = artifact.last_weight[static_cast<std::size_t>(i * d + k)];
    }
  }
  map.bias = Eigen::VectorXd::Zero(c);
  if (artifact.last_bias.empty()) {
    map.source = "artifact last_weight; no bias exported, zero bias used";
  } else {
    for (Eigen::Index i = 0; i < c; ++i) map.bias(i) = artifact.last_bias[static_cast<std::size_t>(i)];
    map.source = "artifact last_weight + last_bias";
  }
  return map;
}

LaplacePosterior::LaplacePosterior(LastLayerMap map, Eigen::MatrixXd kron_a,
                                   Eigen::MatrixXd kron_b, std::size_t n_train,
                                   LaplaceOptions options)
    : map_(std::move(map)),
      kron_a_(std::move(kron_a)),
      kron_b_(std::move(kron_b)),
      n_train_(n_train),
      options_(options) {
  if (!(options_.prior_precision > 0.0) || !std::isfinite(options_.prior_precision)) {
    throw Error(ErrorCode::kInvalidArgument, "prior precision must be positive and finite");
  }
  const auto c = map_.weight.rows();
  const auto d = map_.weight.cols() + (options_.include_bias ? 1 : 0);
  if (map_.bias.size() != c || kron_b_.rows() != c || kron_b_.cols() != c ||
      kron_a_.rows() != d || kron_a_.cols() != d) {
    throw Error(ErrorCode::kShapeMismatch, "Laplace factor shapes disagree with the MAP layer");
  }
  if (!map_.weight.allFinite() || !map_.bias.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "MAP last layer has non-finite entries");
  }
  decompose(kron_a_, "A", basis_a_, eig_a_);
  decompose(kron_b_, "B", basis_b_, eig_b_);
}

LaplacePosterior LaplacePosterior::with_prior_precision(double prior_precision) const {
  LaplacePosterior copy = *this;
  if (!(prior_precision > 0.0) || !std::isfinite(prior_precision)) {
    throw Error(ErrorCode::kInvalidArgument, "prior precision must be positive and finite");
  }
  copy.options_.prior_precision = prior_precision;
  return copy;
}

Eigen::VectorXd LaplacePosterior::features(std::span<const float> embedding) const {
  const auto d = map_.weight.cols();
  if (static_cast<Eigen::Index>(embedding.size()) != d) {
    throw Error(ErrorCode::kLengthMismatch, "Laplace query has the wrong embedding dimension");
  }
  Eigen::VectorXd phi(kron_a_.rows());
  for (Eigen::Index k = 0; k < d; ++k) phi(k) = embedding[static_cast<std::size_t>(k)];
  if (options_.include_bias) phi(d) = 1.0;
  return phi;
}

Eigen::MatrixXd LaplacePosterior::mean_weights() const {
  if (!options_.include_bias) return map_.weight;
  Eigen::MatrixXd w(map_.weight.rows(), map_.weight.cols() + 1);
  w << map_.weight, map_.bias;
  return w;
}

Eigen::VectorXd LaplacePosterior::latent_mean(std::span<const float> embedding) const {
  const Eigen::VectorXd phi = features(embedding);
  const Eigen::VectorXd e = phi.head(map_.weight.cols());
  return map_.weight * e + map_.bias;
}

Eigen::MatrixXd LaplacePosterior::latent_covariance(std::span<const float> embedding) const {
  const Eigen::VectorXd q = basis_a_.transpose() * features(embedding);
  const Eigen::ArrayXd q2 = q.array().square();
  const double n = static_cast<double>(n_train_);
  const double prior = options_.prior_precision;
  Eigen::VectorXd weights(eig_b_.size());
  for (Eigen::Index j = 0; j < eig_b_.size(); ++j) {
    weights(j) = (q2 / (n * eig_b_(j) * eig_a_.array() + prior)).sum();
  }
  return basis_b_ * weights.asDiagonal() * basis_b_.transpose();
}

Eigen::VectorXd LaplacePosterior::latent_variance(std::span<const float> embedding) const {
  return latent_covariance(embedding).diagonal().cwiseMax(0.0);
}

Eigen::VectorXd LaplacePosterior::centred_latent_variance(std::span<const float> embedding) const {
  // Softmax ignores a shift shared by all logits, so that component of the
  // latent covariance is dropped before the probit scaling.
  const Eigen::MatrixXd cov = latent_covariance(embedding);
  const Eigen::Index c = cov.rows();
  const Eigen::MatrixXd centre =
      Eigen::MatrixXd::Identity(c, c) - Eigen::MatrixXd::Constant(c, c, 1.0 / static_cast<double>(c));
  return (centre * cov * centre).diagonal().cwiseMax(0.0);
}

Eigen::VectorXd LaplacePosterior::covariance_eigenvalues() const {
  const double n = static_cast<double>(n_train_);
  Eigen::VectorXd out(eig_b_.size() * eig_a_.size());
  for (Eigen::Index j = 0; j < eig_b_.size(); ++j) {
    for (Eigen::Index k = 0; k < eig_a_.size(); ++k) {
      out(j * eig_a_.size() + k) = 1.0 / (n * eig_b_(j) * eig_a_(k) + options_.prior_precision);
    }
  }
  return out;
}

Eigen::MatrixXd LaplacePosterior::dense_covariance() const {
  const auto c = kron_b_.rows();
  const auto d = kron_a_.rows();
  const double n = static_cast<double>(n_train_);
  Eigen::MatrixXd precision(c * d, c * d);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      precision.block(i * d, j * d, d, d) = n * kron_b_(i, j) * kron_a_;
    }
  }
  precision.diagonal().array() += options_.prior_precision;
  return precision.llt().solve(Eigen::MatrixXd::Identity(c * d, c * d));
}

LaplacePosterior fit_laplace(const PredictionArtifact& train, LastLayerMap map,
                             LaplaceOptions options) {
  if (!train.has_embeddings()) {
    throw Error(ErrorCode::kMissingEmbeddings, "laplace requires embeddings in the train split");
  }
  const auto c = static_cast<Eigen::Index>(train.n_classes);
  const auto d = static_cast<Eigen::Index>(train.embed_dim);
  if (map.weight.rows() != c || map.weight.cols() != d || map.bias.size() != c) {
    throw Error(ErrorCode::kShapeMismatch, "MAP last layer shape disagrees with the artifact");
  }
  const Eigen::Index feature_dim = d + (options.include_bias ? 1 : 0);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(feature_dim, feature_dim);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(c, c);
  Eigen::VectorXd phi(feature_dim);
  for (std::size_t i = 0; i < train.n_samples; ++i) {
    const auto e = train.embedding(i);
    for (Eigen::Index k = 0; k < d; ++k) phi(k) = e[static_cast<std::size_t>(k)];
    if (options.include_bias) phi(d) = 1.0;
    a.noalias() += phi * phi.transpose();

    const Eigen::VectorXd p = softmax_vector(map.weight * phi.head(d) + map.bias);
    b.diagonal() += p;
    b.noalias() -= p * p.transpose();
  }
  const double n = static_cast<double>(train.n_samples);
  a /= n;
  b /= n;
  a.diagonal().array() += kJitterScale * a.trace() / static_cast<double>(feature_dim);
  return LaplacePosterior(std::move(map), std::move(a), std::move(b), train.n_samples, options);
}

ProbabilityVector laplace_predictive(const LaplacePosterior& posterior,
                                     std::span<const float> embedding) {
  const Eigen::VectorXd mean = posterior.latent_mean(embedding);
  const Eigen::VectorXd variance = posterior.centred_latent_variance(embedding);
  std::vector<double> scaled(static_cast<std::size_t>(mean.size()));
  for (Eigen::Index c = 0; c < mean.size(); ++c) {
    scaled[static_cast<std::size_t>(c)] =
        mean(c) / std::sqrt(1.0 + std::numbers::pi / 8.0 * variance(c));
  }
  return softmax(std::span<const double>(scaled));
}

double log_marginal_likelihood(const LaplacePosterior& posterior,
                               const PredictionArtifact& train) {
  double log_lik = 0.0;
  for (std::size_t i = 0; i < train.n_samples; ++i) {
    const Eigen::VectorXd f = posterior.latent_mean(train.embedding(i));
    const double peak = f.maxCoeff();
    const double log_norm = peak + std::log((f.array() - peak).exp().sum());
    log_lik += f(train.labels[i]) - log_norm;
  }
  const double prior = posterior.prior_precision();
  const Eigen::MatrixXd w = posterior.mean_weights();
  const double n_params = static_cast<double>(w.size());
  const double n = static_cast<double>(posterior.n_train());
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < posterior.eigenvalues_b().size(); ++j) {
    for (Eigen::Index k = 0; k < posterior.eigenvalues_a().size(); ++k) {
      log_det += std::log(n * posterior.eigenvalues_b()(j) * posterior.eigenvalues_a()(k) + prior);
    }
  }
  return log_lik - 0.5 * prior * w.squaredNorm() + 0.5 * n_params * std::log(prior) -
         0.5 * log_det;
}

double predictive_nll(const LaplacePosterior& posterior, const PredictionArtifact& split) {
  if (!split.has_embeddings()) {
    throw Error(ErrorCode::kMissingEmbeddings, "laplace requires embeddings");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < split.n_samples; ++i) {
    const auto p = laplace_predictive(posterior, split.embedding(i));
    total -= std::log(std::max(p[static_cast<std::size_t>(split.labels[i])], 1e-300));
  }
  return total / static_cast<double>(split.n_samples);
}

double select_prior_precision(const LaplacePosterior& fitted, const PredictionArtifact& train,
                              const PredictionArtifact& val, std::span<const double> grid,
                              PriorSelection criterion) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyInput, "prior precision grid is empty");
  double best_value = grid.front();
  double best_objective = -HUGE_VAL;
  for (double candidate : grid) {
    const auto posterior = fitted.with_prior_precision(candidate);
    const double objective = criterion == PriorSelection::kMarginalLikelihood
                                 ? log_marginal_likelihood(posterior, train)
                                 : -predictive_nll(posterior, val);
    if (objective > best_objective) {
      best_objective = objective;
      best_value = candidate;
    }
  }
  return best_value;
}

}  // namespace fdbench
