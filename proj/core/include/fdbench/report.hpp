#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdbench/harness.hpp"
#include "fdbench/scores.hpp"

namespace fdbench {

// Writes results.json, results.csv (score,seed,group,metric,value),
// risk_coverage/<score>_seed<k>.csv and plots/<metric>.svg.
void emit_report(const BenchmarkResult& result, const std::filesystem::path& out);

std::string results_to_json(const BenchmarkResult& result);
BenchmarkResult results_from_json(const std::string& text);
BenchmarkResult load_results(const std::filesystem::path& results_json);

// One box per score: q1..q3 box, median line, whiskers at min and max.
std::string boxplot_svg(const std::string& metric,
                        const std::vector<std::pair<std::string, std::vector<double>>>& groups);

// sample_index,score,predicted_class,label,correct
void write_scores_csv(const ScoredPredictions& scored, const std::filesystem::path& file);
// Reads the same layout back; method is supplied by the caller.
ScoredPredictions read_scores_csv(const std::filesystem::path& file, ScoreMethod method);

}  // namespace fdbench
