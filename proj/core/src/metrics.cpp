#include "fdbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fdbench/error.hpp"

namespace fdbench {

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> positives,
                         std::string_view what) {
  if (scores.size() != positives.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, std::string(what) + ": no samples");
  ClassCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::kNonFinite, std::string(what) + ": non-finite score");
    }
    if (positives[i]) {
      ++counts.positives;
    } else {
      ++counts.negatives;
    }
  }
  return counts;
}

void require_both_classes(const ClassCounts& counts, std::string_view what) {
  if (counts.positives == 0 || counts.negatives == 0) {
    throw Error(ErrorCode::kDegenerateClasses,
                std::string(what) + " needs at least one positive and one negative (got " +
                    std::to_string(counts.positives) + " / " + std::to_string(counts.negatives) +
                    ")");
  }
}

std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Calls visit(group_score, group_positives, group_negatives) for each run of
// tied scores, highest first.
template <typename Visit>
void for_each_tie_group(std::span<const double> scores, std::span<const std::uint8_t> positives,
                        Visit&& visit) {
  const auto order = order_descending(scores);
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    std::size_t pos = 0;
    std::size_t neg = 0;
    while (i < order.size() && scores[order[i]] == value) {
      if (positives[order[i]]) {
        ++pos;
      } else {
        ++neg;
      }
      ++i;
    }
    visit(value, pos, neg);
  }
}

}  // namespace

CorrectnessVector correctness(std::span<const std::int32_t> predicted,
                              std::span<const std::int32_t> labels) {
  if (predicted.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predicted and labels differ in length");
  }
  CorrectnessVector out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = predicted[i] == labels[i] ? 1 : 0;
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positives) {
  const auto counts = check_inputs(scores, positives, "roc_auc");
  require_both_classes(counts, "roc_auc");
  // Twice the Mann-Whitney U, kept integral until the final division.
  std::uint64_t twice_u = 0;
  std::uint64_t negatives_below = counts.negatives;
  for_each_tie_group(scores, positives, [&](double, std::size_t pos, std::size_t neg) {
    negatives_below -= neg;
    twice_u += pos * (2 * negatives_below + neg);
  });
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double fpr_at_tpr(std::span<const double> scores, std::span<const std::uint8_t> positives,
                  double target_tpr) {
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target TPR must lie in (0, 1]");
  }
  const auto counts = check_inputs(scores, positives, "fpr_at_tpr");
  require_both_classes(counts, "fpr_at_tpr");
  const double n_pos = static_cast<double>(counts.positives);
  const double n_neg = static_cast<double>(counts.negatives);
  std::size_t tp = 0;
  std::size_t fp = 0;
  double result = 1.0;
  bool found = false;
  for_each_tie_group(scores, positives, [&](double, std::size_t pos, std::size_t neg) {
    if (found) return;
    tp += pos;
    fp += neg;
    if (static_cast<double>(tp) / n_pos >= target_tpr) {
      result = static_cast<double>(fp) / n_neg;
      found = true;
    }
  });
  return result;
}

double ece(std::span<const double> confidences, std::span<const std::uint8_t> positives,
           std::size_t bins, std::string_view score_name) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "ECE needs at least one bin");
  if (confidences.size() != positives.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ece: confidences and labels differ in length");
  }
  if (confidences.empty()) throw Error(ErrorCode::kEmptyInput, "ece: no samples");
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> correct_sum(bins, 0.0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw Error(ErrorCode::kConfidenceOutOfRange,
                  "score '" + std::string(score_name) +
                      "' is not probability-valued; ECE needs confidences in [0, 1]");
    }
    const auto b = std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1);
    ++count[b];
    conf_sum[b] += c;
    correct_sum[b] += positives[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(confidences.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double size = static_cast<double>(count[b]);
    total += (size / n) * std::abs(correct_sum[b] / size - conf_sum[b] / size);
  }
  return total;
}

std::vector<RiskCoveragePoint> risk_coverage(std::span<const double> scores,
                                             std::span<const std::uint8_t> positives) {
  check_inputs(scores, positives, "risk_coverage");
  const double n = static_cast<double>(scores.size());
  std::vector<RiskCoveragePoint> curve;
  std::size_t accepted = 0;
  std::size_t errors = 0;
  for_each_tie_group(scores, positives, [&](double, std::size_t pos, std::size_t neg) {
    accepted += pos + neg;
    errors += neg;
    curve.push_back({static_cast<double>(accepted) / n,
                     static_cast<double>(errors) / static_cast<double>(accepted)});
  });
  return curve;
}

double select_threshold_at_fpr(std::span<const double> scores,
                               std::span<const std::uint8_t> labels, double target_fpr) {
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target FPR must lie in [0, 1]");
  }
  const auto counts = check_inputs(scores, labels, "select_threshold_at_fpr");
  require_both_classes(counts, "threshold selection on the validation split");
  const double n_neg = static_cast<double>(counts.negatives);
  const double top = *std::max_element(scores.begin(), scores.end());
  double threshold = std::nextafter(top, std::numeric_limits<double>::infinity());
  std::size_t fp = 0;
  bool exceeded = false;
  for_each_tie_group(scores, labels, [&](double value, std::size_t, std::size_t neg) {
    if (exceeded) return;
    fp += neg;
    if (static_cast<double>(fp) / n_neg <= target_fpr) {
      threshold = value;
    } else {
      exceeded = true;
    }
  });
  return threshold;
}

double average_precision(std::span<const double> scores,
                         std::span<const std::uint8_t> positives) {
  const auto counts = check_inputs(scores, positives, "average_precision");
  if (counts.positives == 0) {
    throw Error(ErrorCode::kDegenerateClasses, "average_precision needs at least one positive");
  }
  const double n_pos = static_cast<double>(counts.positives);
  std::size_t tp = 0;
  std::size_t accepted = 0;
  double ap = 0.0;
  for_each_tie_group(scores, positives, [&](double, std::size_t pos, std::size_t neg) {
    tp += pos;
    accepted += pos + neg;
    if (pos > 0) {
      ap += (static_cast<double>(pos) / n_pos) *
            (static_cast<double>(tp) / static_cast<double>(accepted));
    }
  });
  return ap;
}

std::vector<std::vector<std::size_t>> ensemble_combinations(std::size_t n_models,
                                                            std::size_t size) {
  if (size == 0 || size > n_models) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot pick " + std::to_string(size) + " of " + std::to_string(n_models) +
                    " ensemble members");
  }
  std::vector<std::vector<std::size_t>> out;
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t start = 0; start < n_models; ++start) {
    std::vector<std::size_t> window(size);
    for (std::size_t j = 0; j < size; ++j) window[j] = (start + j) % n_models;
    auto key = window;
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second) out.push_back(std::move(window));
  }
  return out;
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "summarize: no values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  auto quantile = [&](double q) {
    const double h = static_cast<double>(n - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  SummaryStats s;
  s.count = n;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

}  // namespace fdbench
