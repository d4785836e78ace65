#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdbench/artifact.hpp"
#include "fdbench/probability.hpp"

namespace fdbench {

class TrustModel;
struct CentroidModel;
class LaplacePosterior;
class ConfidNetModel;

// p_hat of the predicted class.
double msp_score(const ProbabilityVector& probs, int predicted_class);
inline double msp_score(const PredictionRecord& record) {
  return msp_score(record.probs, record.predicted_class);
}

// -D_alpha = -(1 - g) / g with g = sum_c p_c^2, so higher = more confident.
double doctor_score(const ProbabilityVector& probs);

// sum_c p_c ln p_c (0 ln 0 = 0); 0 for one-hot, -ln C for uniform.
double negative_entropy_score(const ProbabilityVector& probs);

enum class ScoreMethod {
  kMsp,
  kDoctor,
  kNegEntropy,
  kMcMsp,
  kMcEntropy,
  kEnsembleMsp,
  kTrustScore,
  kCentroidRbf,
  kLaplace,
  kConfidNet,
};

inline constexpr ScoreMethod kAllScoreMethods[] = {
    ScoreMethod::kMsp,        ScoreMethod::kDoctor,      ScoreMethod::kNegEntropy,
    ScoreMethod::kMcMsp,      ScoreMethod::kMcEntropy,   ScoreMethod::kEnsembleMsp,
    ScoreMethod::kTrustScore, ScoreMethod::kCentroidRbf, ScoreMethod::kLaplace,
    ScoreMethod::kConfidNet,
};

std::string_view to_string(ScoreMethod method) noexcept;
// Throws Error(kUnknownScore).
ScoreMethod parse_score_method(std::string_view name);

// Where a method's class probabilities come from.
enum class ProbabilitySource { kSinglePass, kMultiPass, kLaplace };

struct MethodRequirements {
  bool embeddings = false;   // on the scored split
  bool multi_pass = false;   // n_passes >= 2
  bool last_layer = false;   // last_weight in the train split
  bool train_split = false;  // a fitted model from train
  bool val_split = false;    // validation data during fitting
  bool probability_valued = false;  // eligible for ECE
  ProbabilitySource source = ProbabilitySource::kSinglePass;
};

MethodRequirements requirements(ScoreMethod method) noexcept;

// Human-readable list of what a method needs, e.g. for skip records.
std::string describe_requirements(ScoreMethod method);

// Fitted models borrowed by score_artifact; only those the method needs
// must be set.
struct ScoringModels {
  const TrustModel* trust = nullptr;
  const CentroidModel* centroid = nullptr;
  const LaplacePosterior* laplace = nullptr;
  const ConfidNetModel* confidnet = nullptr;
};

struct ScoredPredictions {
  ScoreMethod method = ScoreMethod::kMsp;
  std::vector<double> scores;
  std::vector<std::int32_t> predicted;
  std::vector<std::int32_t> labels;
  std::vector<double> positive_class_probs;  // p_hat_1, binary tasks only
};

// Throws Error(kRequirementUnmet) naming what is missing. The data-only
// variant ignores fitted models, so it can run before any fitting.
void check_data_requirements(const PredictionArtifact& artifact, ScoreMethod method);
void check_requirements(const PredictionArtifact& artifact, ScoreMethod method,
                        const ScoringModels& models);

// The probability vectors a method predicts from, one per sample.
std::vector<ProbabilityVector> predictive_probabilities(const PredictionArtifact& artifact,
                                                        ScoreMethod method,
                                                        const ScoringModels& models);

// aggregate_passes -> predict_class -> method score, per sample.
ScoredPredictions score_artifact(const PredictionArtifact& artifact, ScoreMethod method,
                                 const ScoringModels& models,
                                 std::optional<double> binary_threshold = std::nullopt);

}  // namespace fdbench
