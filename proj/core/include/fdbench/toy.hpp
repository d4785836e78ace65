#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace fdbench {

// Two models that predict identical labels: model 1 reports the true success
// probability x, model 2 squeezes it into [0.9, 1] as 0.9 + 0.1 x.
struct ToySample {
  double x = 0.0;
  bool correct = false;
  double conf1 = 0.0;
  double conf2 = 0.0;
};

// x ~ Uniform[0,1), correct ~ Bernoulli(x), drawn from Rng(seed).
std::vector<ToySample> simulate_toy(std::size_t n, std::uint64_t seed);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
};

// Fixed-width bins over [0, 1]; 1.0 goes in the last bin.
std::vector<HistogramBin> confidence_histogram(const std::vector<double>& confidences,
                                               const std::vector<std::uint8_t>& correct,
                                               double bin_width = 0.05);

struct ToyReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t ece_bins = 15;
  double accuracy = 0.0;
  double ece_model1 = 0.0;
  double ece_model2 = 0.0;
  double auc_model1 = 0.0;
  double auc_model2 = 0.0;
  std::vector<HistogramBin> histogram_model1;
  std::vector<HistogramBin> histogram_model2;
};

ToyReport run_toy_experiment(std::size_t n, std::uint64_t seed, std::size_t ece_bins = 15);

// toy_report.json, toy_hist_model1.csv, toy_hist_model2.csv.
void write_toy_report(const ToyReport& report, const std::filesystem::path& directory);

}  // namespace fdbench
