#include "fdbench/scores.hpp"

#include <cmath>

#include "fdbench/centroid.hpp"
#include "fdbench/confidnet.hpp"
#include "fdbench/error.hpp"
#include "fdbench/laplace.hpp"
#include "fdbench/trust_score.hpp"

namespace fdbench {

double msp_score(const ProbabilityVector& probs, int predicted_class) {
  if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= probs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "predicted class out of range");
  }
  return probs[static_cast<std::size_t>(predicted_class)];
}

double doctor_score(const ProbabilityVector& probs) {
  double g = 0.0;
  for (double p : probs.values()) g += p * p;
  if (!(g > 0.0)) {
    throw Error(ErrorCode::kDegenerateProbabilities, "DOCTOR: sum of squared probabilities is 0");
  }
  return -(1.0 - g) / g;
}

double negative_entropy_score(const ProbabilityVector& probs) {
  double total = 0.0;
  for (double p : probs.values()) {
    if (p > 0.0) total += p * std::log(p);
  }
  return total;
}

std::string_view to_string(ScoreMethod method) noexcept {
  switch (method) {
    case ScoreMethod::kMsp: return "msp";
    case ScoreMethod::kDoctor: return "doctor";
    case ScoreMethod::kNegEntropy: return "neg-entropy";
    case ScoreMethod::kMcMsp: return "mc-msp";
    case ScoreMethod::kMcEntropy: return "mc-entropy";
    case ScoreMethod::kEnsembleMsp: return "ensemble-msp";
    case ScoreMethod::kTrustScore: return "trustscore";
    case ScoreMethod::kCentroidRbf: return "centroid-rbf";
    case ScoreMethod::kLaplace: return "laplace";
    case ScoreMethod::kConfidNet: return "confidnet";
  }
  return "msp";
}

ScoreMethod parse_score_method(std::string_view name) {
  for (auto method : kAllScoreMethods) {
    if (to_string(method) == name) return method;
  }
  throw Error(ErrorCode::kUnknownScore, "unknown score identifier '" + std::string(name) + "'");
}

MethodRequirements requirements(ScoreMethod method) noexcept {
  MethodRequirements r;
  switch (method) {
    case ScoreMethod::kMsp:
      r.probability_valued = true;
      break;
    case ScoreMethod::kDoctor:
    case ScoreMethod::kNegEntropy:
      break;
    case ScoreMethod::kMcMsp:
    case ScoreMethod::kEnsembleMsp:
      r.multi_pass = true;
      r.probability_valued = true;
      r.source = ProbabilitySource::kMultiPass;
      break;
    case ScoreMethod::kMcEntropy:
      r.multi_pass = true;
      r.source = ProbabilitySource::kMultiPass;
      break;
    case ScoreMethod::kTrustScore:
    case ScoreMethod::kCentroidRbf:
      r.embeddings = true;
      r.train_split = true;
      break;
    case ScoreMethod::kLaplace:
      r.embeddings = true;
      r.train_split = true;
      r.last_layer = true;
      r.probability_valued = true;
      r.source = ProbabilitySource::kLaplace;
      break;
    case ScoreMethod::kConfidNet:
      r.embeddings = true;
      r.train_split = true;
      r.val_split = true;
      r.probability_valued = true;
      break;
  }
  return r;
}

std::string describe_requirements(ScoreMethod method) {
  const auto r = requirements(method);
  std::string out;
  auto add = [&](const char* what) {
    if (!out.empty()) out += ", ";
    out += what;
  };
  if (r.embeddings) add("penultimate-layer embeddings");
  if (r.multi_pass) add("multiple inference passes or ensemble members (n_passes >= 2)");
  if (r.last_layer) add("last-layer weights (last_weight)");
  if (r.train_split) add("a train split");
  if (r.val_split) add("a validation split");
  if (out.empty()) out = "softmax outputs only";
  return out;
}

namespace {

void check_impl(const PredictionArtifact& artifact, ScoreMethod method,
                const ScoringModels* models) {
  const auto r = requirements(method);
  std::string missing;
  auto note = [&](const char* what) {
    if (!missing.empty()) missing += ", ";
    missing += what;
  };
  if (r.embeddings && !artifact.has_embeddings()) note("embeddings (artifact has embed_dim = 0)");
  if (r.multi_pass && artifact.n_passes < 2) note("n_passes >= 2 (artifact has a single pass)");
  if (models != nullptr) {
    if (method == ScoreMethod::kTrustScore && models->trust == nullptr) note("fitted TrustScore model");
    if (method == ScoreMethod::kCentroidRbf && models->centroid == nullptr) note("fitted centroid model");
    if (method == ScoreMethod::kLaplace && models->laplace == nullptr) note("fitted Laplace posterior");
    if (method == ScoreMethod::kConfidNet && models->confidnet == nullptr) note("trained ConfidNet");
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kRequirementUnmet,
                std::string(to_string(method)) + " requires " + describe_requirements(method) +
                    "; missing: " + missing);
  }
}

}  // namespace

void check_data_requirements(const PredictionArtifact& artifact, ScoreMethod method) {
  check_impl(artifact, method, nullptr);
}

void check_requirements(const PredictionArtifact& artifact, ScoreMethod method,
                        const ScoringModels& models) {
  check_impl(artifact, method, &models);
}

std::vector<ProbabilityVector> predictive_probabilities(const PredictionArtifact& artifact,
                                                        ScoreMethod method,
                                                        const ScoringModels& models) {
  check_requirements(artifact, method, models);
  std::vector<ProbabilityVector> out;
  out.reserve(artifact.n_samples);
  for (std::size_t i = 0; i < artifact.n_samples; ++i) {
    if (requirements(method).source == ProbabilitySource::kLaplace) {
      out.push_back(laplace_predictive(*models.laplace, artifact.embedding(i)));
    } else {
      out.push_back(aggregate_passes(artifact.sample_logits(i), artifact.n_passes));
    }
  }
  return out;
}

ScoredPredictions score_artifact(const PredictionArtifact& artifact, ScoreMethod method,
                                 const ScoringModels& models,
                                 std::optional<double> binary_threshold) {
  if (binary_threshold && artifact.n_classes != 2) {
    throw Error(ErrorCode::kInvalidArgument, "binary threshold requires a 2-class artifact");
  }
  auto probs = predictive_probabilities(artifact, method, models);
  ScoredPredictions result;
  result.method = method;
  result.labels = artifact.labels;
  result.scores.resize(artifact.n_samples);
  result.predicted.resize(artifact.n_samples);
  if (artifact.n_classes == 2) result.positive_class_probs.resize(artifact.n_samples);

  for (std::size_t i = 0; i < artifact.n_samples; ++i) {
    const auto& p = probs[i];
    const int predicted = predict_class(p, binary_threshold);
    result.predicted[i] = predicted;
    if (artifact.n_classes == 2) result.positive_class_probs[i] = p[1];
    double score = 0.0;
    switch (method) {
      case ScoreMethod::kMsp:
      case ScoreMethod::kMcMsp:
      case ScoreMethod::kEnsembleMsp:
      case ScoreMethod::kLaplace:
        score = msp_score(p, predicted);
        break;
      case ScoreMethod::kDoctor:
        score = doctor_score(p);
        break;
      case ScoreMethod::kNegEntropy:
      case ScoreMethod::kMcEntropy:
        score = negative_entropy_score(p);
        break;
      case ScoreMethod::kTrustScore:
        score = trustscore(*models.trust, artifact.embedding(i), predicted);
        break;
      case ScoreMethod::kCentroidRbf:
        score = centroid_score(*models.centroid, artifact.embedding(i), predicted);
        break;
      case ScoreMethod::kConfidNet:
        score = confidnet_score(*models.confidnet, artifact.embedding(i));
        break;
    }
    if (!std::isfinite(score)) {
      throw Error(ErrorCode::kNonFinite, std::string(to_string(method)) + " produced a non-finite score");
    }
    result.scores[i] = score;
  }
  return result;
}

}  // namespace fdbench
