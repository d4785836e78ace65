#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdbench/artifact.hpp"
#include "fdbench/config.hpp"
#include "fdbench/metrics.hpp"
#include "fdbench/scores.hpp"

namespace fdbench {

std::string_view toolkit_version() noexcept;

struct EvalOptions {
  double target_tpr = 0.8;
  std::size_t ece_bins = 15;
};

// Metrics of one score on one seed (or one ensemble combination).
struct EvalReport {
  std::string score;
  std::int64_t seed = 0;
  std::string group;  // "seed" or "ensemble:{i,j,k}"
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  double roc_auc_error_detection = 0.0;
  double fpr_at_tpr = 0.0;
  double target_tpr = 0.8;
  std::optional<double> ece;             // probability-valued scores only
  std::optional<double> binary_roc_auc;  // 2-class tasks only
  std::optional<double> threshold;       // binary decision threshold used
  std::vector<RiskCoveragePoint> risk_coverage;

  // Scalar metrics in a fixed order, e.g. for CSV rows.
  std::vector<std::pair<std::string, double>> metric_values() const;
};

// Errors in metric computation (e.g. no misclassified samples) propagate
// as named Errors.
EvalReport evaluate(const ScoredPredictions& scored, std::int64_t seed, const EvalOptions& options,
                    std::optional<double> threshold = std::nullopt);

struct SkipRecord {
  std::string score;
  std::int64_t seed = 0;
  std::string error;   // ErrorCode name
  std::string reason;
};

struct Provenance {
  std::string config_hash;  // FNV-1a 64 of the canonical config JSON
  std::string toolkit_version;
  std::vector<std::int64_t> seeds;
  std::vector<std::string> scores;
  std::string config_json;
};

struct BenchmarkResult {
  std::vector<EvalReport> reports;
  std::vector<SkipRecord> skipped;
  // score -> metric -> summary over seeds
  std::map<std::string, std::map<std::string, SummaryStats>> aggregation;
  Provenance provenance;
};

std::string fnv1a_hex(std::string_view text);

// Per score: summary over all reports of that score.
std::map<std::string, std::map<std::string, SummaryStats>> aggregate_seeds(
    std::span<const EvalReport> reports);

// Stacks ensemble members along the pass axis. Members must agree on
// samples, classes and labels.
PredictionArtifact stack_members(std::span<const PredictionArtifact> members);

// Loads artifacts, fits what each requested score needs, picks binary
// thresholds, scores the test split and evaluates. Unmet requirements
// become skip records (or an Error when config.strict is set).
BenchmarkResult run_benchmark(const RunConfig& config);

// Scores only (no metrics): (score, seed) -> predictions, plus skips.
struct ScoreRun {
  std::vector<std::pair<std::pair<std::string, std::int64_t>, ScoredPredictions>> scored;
  std::vector<SkipRecord> skipped;
};
ScoreRun score_benchmark(const RunConfig& config);

}  // namespace fdbench
