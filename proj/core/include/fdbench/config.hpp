#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fdbench/confidnet.hpp"
#include "fdbench/laplace.hpp"
#include "fdbench/scores.hpp"

namespace fdbench {

struct SeedPaths {
  std::int64_t seed = 0;
  std::filesystem::path train;  // optional: empty if absent
  std::filesystem::path val;
  std::filesystem::path test;
  std::filesystem::path mc_val;  // multi-pass (MC-dropout) exports
  std::filesystem::path mc_test;
};

struct EnsembleMember {
  std::filesystem::path val;
  std::filesystem::path test;
};

struct EnsembleConfig {
  std::vector<EnsembleMember> members;
  std::size_t size = 3;
};

enum class ThresholdPolicy { kNone, kFixed, kFprTarget };

struct ThresholdConfig {
  ThresholdPolicy policy = ThresholdPolicy::kNone;
  double value = 0.5;        // kFixed
  double target_fpr = 0.2;   // kFprTarget
};

enum class PriorPolicy { kFixed, kMarginalLikelihood, kValidationNll };

struct LaplaceConfig {
  LaplaceOptions options;
  PriorPolicy selection = PriorPolicy::kFixed;
  std::vector<double> grid{0.1, 1.0, 10.0, 100.0};
};

struct MetricConfig {
  double target_tpr = 0.8;
  std::size_t ece_bins = 15;
};

struct RunConfig {
  std::vector<SeedPaths> seeds;
  std::optional<EnsembleConfig> ensemble;
  std::vector<ScoreMethod> scores;
  ThresholdConfig threshold;
  MetricConfig metrics;
  LaplaceConfig laplace;
  ConfidNetConfig confidnet;
  std::filesystem::path output_dir;
  bool strict = false;

  // Canonical (key-sorted, resolved) JSON of the config; hashed for provenance.
  std::string canonical_json;
};

// Used when a config omits "scores": every method, minus the entropy scores
// when a binary threshold other than 0.5 is configured.
std::vector<ScoreMethod> default_score_suite(const ThresholdConfig& threshold);

// Parses and validates a UTF-8 JSON config. Relative paths resolve against
// the config file's directory. Throws Error(kConfig) / Error(kUnknownScore)
// before any artifact is read.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);

// Re-validates after programmatic edits (e.g. a --scores override) and
// refreshes canonical_json.
void finalize_run_config(RunConfig& config);

std::string to_json_string(const RunConfig& config);

}  // namespace fdbench
