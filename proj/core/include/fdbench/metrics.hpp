#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fdbench {

// 1 where the prediction was correct. Correct predictions are the positive
// class for every error-detection metric below.
using CorrectnessVector = std::vector<std::uint8_t>;

CorrectnessVector correctness(std::span<const std::int32_t> predicted,
                              std::span<const std::int32_t> labels);

// Mann-Whitney AUC with half credit for ties, computed from one sort.
// Throws Error(kDegenerateClasses) unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positives);

// FPR at the first threshold, sweeping from high to low, where
// TPR >= target_tpr. A threshold admits every sample scoring >= it, so tied
// scores enter together.
double fpr_at_tpr(std::span<const double> scores, std::span<const std::uint8_t> positives,
                  double target_tpr = 0.8);

// Expected calibration error over `bins` equal-width bins on [0, 1]; a
// confidence lands in bin floor(conf * bins), with 1.0 in the last bin.
// Throws Error(kConfidenceOutOfRange) naming score_name for values outside
// [0, 1].
double ece(std::span<const double> confidences, std::span<const std::uint8_t> positives,
           std::size_t bins = 15, std::string_view score_name = "score");

struct RiskCoveragePoint {
  double coverage = 0.0;
  double risk = 0.0;

  bool operator==(const RiskCoveragePoint&) const = default;
};

// One point per distinct score value, accepting samples in descending
// score order.
std::vector<RiskCoveragePoint> risk_coverage(std::span<const double> scores,
                                             std::span<const std::uint8_t> positives);

// Smallest observed score t with FPR(score >= t) <= target_fpr on the
// validation labels (1 = positive class). When no observed score qualifies,
// returns the next double above the maximum score, which admits nothing.
double select_threshold_at_fpr(std::span<const double> scores,
                               std::span<const std::uint8_t> labels, double target_fpr = 0.2);

// Step-wise average precision, ties grouped.
double average_precision(std::span<const double> scores,
                         std::span<const std::uint8_t> positives);

// Cyclic windows {i, ..., i+k-1 mod n} for i = 0..n-1, duplicates (as sets)
// removed, first occurrence kept.
std::vector<std::vector<std::size_t>> ensemble_combinations(std::size_t n_models,
                                                            std::size_t size);

struct SummaryStats {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};

// Quartiles use linear interpolation between order statistics.
SummaryStats summarize(std::span<const double> values);

}  // namespace fdbench
