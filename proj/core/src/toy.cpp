#include "fdbench/toy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fdbench/error.hpp"
#include "fdbench/metrics.hpp"
#include "fdbench/rng.hpp"

namespace fdbench {

namespace fs = std::filesystem;

std::vector<ToySample> simulate_toy(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "toy simulation needs n >= 1");
  Rng rng(seed);
  std::vector<ToySample> samples(n);
  for (auto& s : samples) {
    s.x = rng.uniform();
    s.correct = rng.bernoulli(s.x);
    s.conf1 = s.x;
    s.conf2 = 0.9 + 0.1 * s.conf1;
  }
  return samples;
}

std::vector<HistogramBin> confidence_histogram(const std::vector<double>& confidences,
                                               const std::vector<std::uint8_t>& correct,
                                               double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "histogram bin width must lie in (0, 1]");
  }
  const auto n_bins = static_cast<std::size_t>(std::llround(std::ceil(1.0 / bin_width - 1e-9)));
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lower = static_cast<double>(b) * bin_width;
    bins[b].upper = std::min(1.0, static_cast<double>(b + 1) * bin_width);
  }
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>(confidences[i] / bin_width), n_bins - 1);
    if (correct[i]) {
      ++bins[b].correct;
    } else {
      ++bins[b].incorrect;
    }
  }
  return bins;
}

ToyReport run_toy_experiment(std::size_t n, std::uint64_t seed, std::size_t ece_bins) {
  const auto samples = simulate_toy(n, seed);
  std::vector<double> conf1(n);
  std::vector<double> conf2(n);
  CorrectnessVector correct(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    conf1[i] = samples[i].conf1;
    conf2[i] = samples[i].conf2;
    correct[i] = samples[i].correct ? 1 : 0;
    hits += correct[i];
  }
  ToyReport report;
  report.n = n;
  report.seed = seed;
  report.ece_bins = ece_bins;
  report.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  report.ece_model1 = ece(conf1, correct, ece_bins, "model1");
  report.ece_model2 = ece(conf2, correct, ece_bins, "model2");
  report.auc_model1 = roc_auc(conf1, correct);
  report.auc_model2 = roc_auc(conf2, correct);
  report.histogram_model1 = confidence_histogram(conf1, correct);
  report.histogram_model2 = confidence_histogram(conf2, correct);
  return report;
}

namespace {

void write_histogram(const fs::path& file, const std::vector<HistogramBin>& bins) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  out << "bin_lower,bin_upper,correct,incorrect\n";
  out.precision(17);
  for (const auto& b : bins) {
    out << b.lower << ',' << b.upper << ',' << b.correct << ',' << b.incorrect << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + file.string());
}

}  // namespace

void write_toy_report(const ToyReport& report, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory.string());
  const nlohmann::json doc{
      {"n", report.n},
      {"seed", report.seed},
      {"ece_bins", report.ece_bins},
      {"accuracy", report.accuracy},
      {"model1", {{"ece", report.ece_model1}, {"roc_auc", report.auc_model1}}},
      {"model2", {{"ece", report.ece_model2}, {"roc_auc", report.auc_model2}}},
      {"roc_auc_equal", report.auc_model1 == report.auc_model2},
      {"prng", "mt19937_64, 53-bit uniform doubles"},
  };
  std::ofstream out(directory / "toy_report.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write toy_report.json");
  out << doc.dump(2) << '\n';
  write_histogram(directory / "toy_hist_model1.csv", report.histogram_model1);
  write_histogram(directory / "toy_hist_model2.csv", report.histogram_model2);
}

}  // namespace fdbench
