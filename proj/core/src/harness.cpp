#include "fdbench/harness.hpp"

#include <cstdio>
#include <functional>

#include "fdbench/centroid.hpp"
#include "fdbench/confidnet.hpp"
#include "fdbench/error.hpp"
#include "fdbench/laplace.hpp"
#include "fdbench/trust_score.hpp"
#include "fdbench/version.hpp"

namespace fdbench {

std::string_view toolkit_version() noexcept { return kToolkitVersion; }

std::vector<std::pair<std::string, double>> EvalReport::metric_values() const {
  std::vector<std::pair<std::string, double>> out{
      {"roc_auc_error_detection", roc_auc_error_detection},
      {"fpr_at_tpr", fpr_at_tpr},
      {"accuracy", accuracy},
  };
  if (ece) out.emplace_back("ece", *ece);
  if (binary_roc_auc) out.emplace_back("binary_roc_auc", *binary_roc_auc);
  return out;
}

EvalReport evaluate(const ScoredPredictions& scored, std::int64_t seed, const EvalOptions& options,
                    std::optional<double> threshold) {
  const auto name = std::string(to_string(scored.method));
  const auto correct = correctness(scored.predicted, scored.labels);
  EvalReport report;
  report.score = name;
  report.seed = seed;
  report.group = "seed";
  report.n_samples = scored.scores.size();
  std::size_t hits = 0;
  for (auto c : correct) hits += c;
  report.accuracy = static_cast<double>(hits) / static_cast<double>(correct.size());
  report.roc_auc_error_detection = roc_auc(scored.scores, correct);
  report.target_tpr = options.target_tpr;
  report.fpr_at_tpr = fpr_at_tpr(scored.scores, correct, options.target_tpr);
  if (requirements(scored.method).probability_valued) {
    report.ece = ece(scored.scores, correct, options.ece_bins, name);
  }
  if (!scored.positive_class_probs.empty()) {
    CorrectnessVector is_positive(scored.labels.size());
    for (std::size_t i = 0; i < scored.labels.size(); ++i) is_positive[i] = scored.labels[i] == 1;
    report.binary_roc_auc = roc_auc(scored.positive_class_probs, is_positive);
  }
  report.threshold = threshold;
  report.risk_coverage = risk_coverage(scored.scores, correct);
  return report;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::map<std::string, std::map<std::string, SummaryStats>> aggregate_seeds(
    std::span<const EvalReport> reports) {
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& r : reports) {
    for (const auto& [metric, v] : r.metric_values()) values[r.score][metric].push_back(v);
  }
  std::map<std::string, std::map<std::string, SummaryStats>> out;
  for (const auto& [score, metrics] : values) {
    for (const auto& [metric, v] : metrics) out[score][metric] = summarize(v);
  }
  return out;
}

PredictionArtifact stack_members(std::span<const PredictionArtifact> members) {
  if (members.empty()) throw Error(ErrorCode::kEmptyInput, "no ensemble members to stack");
  const auto& first = members.front();
  std::size_t total_passes = 0;
  for (const auto& m : members) {
    if (m.n_samples != first.n_samples || m.n_classes != first.n_classes || m.labels != first.labels) {
      throw Error(ErrorCode::kShapeMismatch,
                  "ensemble members disagree on samples, classes or labels");
    }
    total_passes += m.n_passes;
  }
  PredictionArtifact out;
  out.n_samples = first.n_samples;
  out.n_classes = first.n_classes;
  out.n_passes = total_passes;
  out.labels = first.labels;
  out.split = first.split;
  out.meta = {{"stacked_members", std::to_string(members.size())}};
  out.logits.reserve(out.n_samples * total_passes * out.n_classes);
  for (std::size_t i = 0; i < out.n_samples; ++i) {
    for (const auto& m : members) {
      const auto block = m.sample_logits(i);
      out.logits.insert(out.logits.end(), block.begin(), block.end());
    }
  }
  return out;
}

namespace {

using Sink = std::function<void(ScoreMethod, std::int64_t, const std::string&, ScoredPredictions,
                                std::optional<double>)>;

class LazyArtifact {
 public:
  explicit LazyArtifact(std::filesystem::path path) : path_(std::move(path)) {}
  bool present() const { return !path_.empty(); }
  const PredictionArtifact& get(const char* role) {
    if (!present()) {
      throw Error(ErrorCode::kRequirementUnmet, std::string("no ") + role + " split configured");
    }
    if (!loaded_) loaded_ = read_artifact(path_);
    return *loaded_;
  }

 private:
  std::filesystem::path path_;
  std::optional<PredictionArtifact> loaded_;
};

std::optional<double> choose_threshold(const RunConfig& config, const PredictionArtifact& test,
                                       const PredictionArtifact* val, ScoreMethod method,
                                       const ScoringModels& models) {
  const auto& th = config.threshold;
  if (th.policy == ThresholdPolicy::kNone) return std::nullopt;
  if (test.n_classes != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "binary threshold policy configured for a " + std::to_string(test.n_classes) +
                    "-class task");
  }
  if (th.policy == ThresholdPolicy::kFixed) return th.value;
  if (val == nullptr) {
    throw Error(ErrorCode::kRequirementUnmet, "fpr-target threshold needs a validation split");
  }
  const auto probs = predictive_probabilities(*val, method, models);
  std::vector<double> p1(probs.size());
  CorrectnessVector is_positive(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    p1[i] = probs[i][1];
    is_positive[i] = val->labels[i] == 1 ? 1 : 0;
  }
  return select_threshold_at_fpr(p1, is_positive, th.target_fpr);
}

void record_skip(const RunConfig& config, std::vector<SkipRecord>& skipped, ScoreMethod method,
                 std::int64_t seed, const Error& e) {
  if (config.strict) throw e;
  skipped.push_back({std::string(to_string(method)), seed, std::string(e.name()), e.what()});
}

void score_seed(const RunConfig& config, const SeedPaths& paths, const Sink& sink,
                std::vector<SkipRecord>& skipped) {
  LazyArtifact train(paths.train);
  LazyArtifact val(paths.val);
  LazyArtifact test(paths.test);
  LazyArtifact mc_val(paths.mc_val);
  LazyArtifact mc_test(paths.mc_test);

  for (const auto method : config.scores) {
    if (method == ScoreMethod::kEnsembleMsp) continue;
    try {
      const auto req = requirements(method);
      const bool multi = req.source == ProbabilitySource::kMultiPass;
      const PredictionArtifact& scored_split =
          multi && mc_test.present() ? mc_test.get("mc_test") : test.get("test");
      const PredictionArtifact* val_split = nullptr;
      if (multi && mc_val.present()) {
        val_split = &mc_val.get("mc_val");
      } else if (val.present()) {
        val_split = &val.get("val");
      }

      std::optional<TrustModel> trust;
      std::optional<CentroidModel> centroid;
      std::optional<LaplacePosterior> laplace;
      std::optional<ConfidNetModel> confidnet;
      ScoringModels models;
      // Cheap checks on the scored split first, so a missing requirement is
      // reported before any fitting.
      check_data_requirements(scored_split, method);

      switch (method) {
        case ScoreMethod::kTrustScore:
          trust = fit_trustscore(train.get("train"));
          models.trust = &*trust;
          break;
        case ScoreMethod::kCentroidRbf:
          centroid = fit_centroids(train.get("train"));
          models.centroid = &*centroid;
          break;
        case ScoreMethod::kLaplace: {
          const auto& tr = train.get("train");
          laplace = fit_laplace(tr, last_layer_from(tr), config.laplace.options);
          if (config.laplace.selection != PriorPolicy::kFixed) {
            const auto criterion = config.laplace.selection == PriorPolicy::kMarginalLikelihood
                                       ? PriorSelection::kMarginalLikelihood
                                       : PriorSelection::kValidationNll;
            const PredictionArtifact& v =
                criterion == PriorSelection::kValidationNll ? val.get("val") : tr;
            laplace = laplace->with_prior_precision(
                select_prior_precision(*laplace, tr, v, config.laplace.grid, criterion));
          }
          models.laplace = &*laplace;
          break;
        }
        case ScoreMethod::kConfidNet:
          confidnet = train_confidnet(train.get("train"), val.get("val"), config.confidnet).model;
          models.confidnet = &*confidnet;
          break;
        default:
          break;
      }

      const auto threshold = choose_threshold(config, scored_split, val_split, method, models);
      sink(method, paths.seed, "seed", score_artifact(scored_split, method, models, threshold),
           threshold);
    } catch (const Error& e) {
      record_skip(config, skipped, method, paths.seed, e);
    }
  }
}

void score_ensembles(const RunConfig& config, const Sink& sink, std::vector<SkipRecord>& skipped) {
  const auto method = ScoreMethod::kEnsembleMsp;
  if (!config.ensemble) {
    const Error e(ErrorCode::kRequirementUnmet,
                  "ensemble-msp requires ensemble.members (per-model val/test artifacts) in the config");
    for (const auto& s : config.seeds) record_skip(config, skipped, method, s.seed, e);
    return;
  }
  const auto& ens = *config.ensemble;
  std::vector<PredictionArtifact> tests;
  std::vector<PredictionArtifact> vals;
  try {
    for (const auto& m : ens.members) {
      tests.push_back(read_artifact(m.test));
      if (!m.val.empty()) vals.push_back(read_artifact(m.val));
    }
  } catch (const Error& e) {
    record_skip(config, skipped, method, 0, e);
    return;
  }
  const auto combos = ensemble_combinations(ens.members.size(), ens.size);
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const auto combo_id = static_cast<std::int64_t>(k);
    try {
      std::vector<PredictionArtifact> test_members;
      std::vector<PredictionArtifact> val_members;
      std::string group = "ensemble:{";
      for (std::size_t j = 0; j < combos[k].size(); ++j) {
        const auto idx = combos[k][j];
        group += (j ? "," : "") + std::to_string(idx);
        test_members.push_back(tests[idx]);
        if (vals.size() == tests.size()) val_members.push_back(vals[idx]);
      }
      group += "}";
      const auto stacked_test = stack_members(test_members);
      std::optional<PredictionArtifact> stacked_val;
      if (!val_members.empty()) stacked_val = stack_members(val_members);
      const auto threshold = choose_threshold(config, stacked_test,
                                              stacked_val ? &*stacked_val : nullptr, method, {});
      sink(method, combo_id, group, score_artifact(stacked_test, method, {}, threshold), threshold);
    } catch (const Error& e) {
      record_skip(config, skipped, method, combo_id, e);
    }
  }
}

void drive(const RunConfig& config, const Sink& sink, std::vector<SkipRecord>& skipped) {
  for (const auto& seed : config.seeds) score_seed(config, seed, sink, skipped);
  for (auto m : config.scores) {
    if (m == ScoreMethod::kEnsembleMsp) score_ensembles(config, sink, skipped);
  }
}

}  // namespace

ScoreRun score_benchmark(const RunConfig& config) {
  ScoreRun run;
  drive(
      config,
      [&](ScoreMethod method, std::int64_t seed, const std::string&, ScoredPredictions scored,
          std::optional<double>) {
        run.scored.push_back({{std::string(to_string(method)), seed}, std::move(scored)});
      },
      run.skipped);
  return run;
}

BenchmarkResult run_benchmark(const RunConfig& config) {
  BenchmarkResult result;
  const EvalOptions options{config.metrics.target_tpr, config.metrics.ece_bins};
  drive(
      config,
      [&](ScoreMethod method, std::int64_t seed, const std::string& group,
          ScoredPredictions scored, std::optional<double> threshold) {
        try {
          auto report = evaluate(scored, seed, options, threshold);
          report.group = group;
          result.reports.push_back(std::move(report));
        } catch (const Error& e) {
          record_skip(config, result.skipped, method, seed, e);
        }
      },
      result.skipped);

  result.aggregation = aggregate_seeds(result.reports);
  auto& prov = result.provenance;
  prov.config_json = config.canonical_json;
  prov.config_hash = fnv1a_hex(config.canonical_json);
  prov.toolkit_version = std::string(toolkit_version());
  for (const auto& s : config.seeds) prov.seeds.push_back(s.seed);
  for (auto m : config.scores) prov.scores.emplace_back(to_string(m));
  return result;
}

}  // namespace fdbench
