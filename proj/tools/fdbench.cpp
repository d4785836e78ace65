// fdbench: command-line front end for the failure-detection testbed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fdbench/error.hpp"
#include "fdbench/harness.hpp"
#include "fdbench/report.hpp"
#include "fdbench/synthetic.hpp"
#include "fdbench/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return 1;
}

std::vector<fdbench::ScoreMethod> parse_score_list(const std::string& text) {
  std::vector<fdbench::ScoreMethod> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(fdbench::parse_score_method(item));
  }
  return out;
}

fdbench::RunConfig load_config(const std::string& path, const std::string& scores, bool strict) {
  auto config = fdbench::load_run_config(path);
  if (!scores.empty()) config.scores = parse_score_list(scores);
  if (strict) config.strict = true;
  fdbench::finalize_run_config(config);
  return config;
}

fs::path output_dir(const std::string& flag, const fdbench::RunConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.output_dir.empty()) return config.output_dir;
  throw fdbench::Error(fdbench::ErrorCode::kConfig, "no --out given and config has no output_dir");
}

json skipped_json(const std::vector<fdbench::SkipRecord>& skipped) {
  json out = json::array();
  for (const auto& s : skipped) {
    out.push_back({{"score", s.score}, {"seed", s.seed}, {"error", s.error}, {"reason", s.reason}});
  }
  return out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw fdbench::Error(fdbench::ErrorCode::kIo, "cannot write " + file.string());
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc failure-detection testbed"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fdbench::toolkit_version()));

  std::string config_path;
  std::string out;
  std::string scores;
  std::string in;
  bool strict = false;

  auto* toy = app.add_subcommand("simulate-toy", "Calibration vs. detection toy experiment");
  std::uint64_t toy_seed = 0;
  std::size_t toy_n = 10000;
  std::size_t toy_bins = 15;
  toy->add_option("--out", out, "Output directory")->required();
  toy->add_option("--seed", toy_seed, "PRNG seed");
  toy->add_option("--n", toy_n, "Number of samples")->check(CLI::PositiveNumber);
  toy->add_option("--bins", toy_bins, "ECE bins")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("generate-synthetic", "Write synthetic artifacts and a run config");
  fdbench::SyntheticConfig synth_cfg;
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "Base seed");
  synth->add_option("--classes", synth_cfg.n_classes, "Number of classes");
  synth->add_option("--dim", synth_cfg.embed_dim, "Embedding dimension");
  synth->add_option("--n", synth_cfg.n_test, "Samples per split");
  synth->add_option("--separation", synth_cfg.separation, "Distance of class means from origin");
  synth->add_option("--seeds", synth_cfg.n_seeds, "Number of model seeds");
  synth->add_option("--members", synth_cfg.ensemble_members, "Ensemble members");

  auto* score = app.add_subcommand("score", "Compute confidence scores per method and seed");
  score->add_option("--config", config_path, "Run config (JSON)")->required();
  score->add_option("--out", out, "Output directory (default: config output_dir)");
  score->add_option("--scores", scores, "Comma-separated score override");
  score->add_flag("--strict", strict, "Fail instead of skipping");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate score CSVs written by 'score'");
  evaluate->add_option("--in", in, "Directory written by 'score'")->required();
  evaluate->add_option("--config", config_path, "Run config for metric settings");
  evaluate->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Score, evaluate and report end to end");
  run->add_option("--config", config_path, "Run config (JSON)")->required();
  run->add_option("--out", out, "Output directory (default: config output_dir)");
  run->add_option("--scores", scores, "Comma-separated score override");
  run->add_flag("--strict", strict, "Fail instead of skipping");

  auto* report = app.add_subcommand("report", "Re-emit CSVs and plots from results.json");
  report->add_option("--in", in, "results.json")->required();
  report->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (toy->parsed()) {
      const auto r = fdbench::run_toy_experiment(toy_n, toy_seed, toy_bins);
      fdbench::write_toy_report(r, out);
      std::cout << json{{"ece_model1", r.ece_model1},
                        {"ece_model2", r.ece_model2},
                        {"auc_model1", r.auc_model1},
                        {"auc_model2", r.auc_model2}}
                       .dump()
                << '\n';
    } else if (synth->parsed()) {
      synth_cfg.n_train = synth_cfg.n_val = synth_cfg.n_test;
      const auto path = fdbench::generate_synthetic(synth_cfg, out);
      std::cout << path.string() << '\n';
    } else if (score->parsed()) {
      const auto config = load_config(config_path, scores, strict);
      const auto dir = output_dir(out, config) / "scores";
      const auto result = fdbench::score_benchmark(config);
      fs::create_directories(dir);
      json index = json::array();
      for (const auto& [key, scored] : result.scored) {
        const auto file = key.first + "_seed" + std::to_string(key.second) + ".csv";
        fdbench::write_scores_csv(scored, dir / file);
        index.push_back({{"score", key.first}, {"seed", key.second}, {"file", file}});
      }
      write_text(dir / "index.json", json{{"scores", index}, {"skipped", skipped_json(result.skipped)}}.dump(2));
      std::cout << dir.string() << '\n';
    } else if (evaluate->parsed()) {
      fdbench::EvalOptions options;
      if (!config_path.empty()) {
        const auto config = fdbench::load_run_config(config_path);
        options = {config.metrics.target_tpr, config.metrics.ece_bins};
      }
      std::ifstream index_file(fs::path(in) / "index.json");
      if (!index_file) {
        throw fdbench::Error(fdbench::ErrorCode::kMissingFile, "no index.json in " + in);
      }
      json index;
      try {
        index = json::parse(index_file);
      } catch (const json::exception& e) {
        throw fdbench::Error(fdbench::ErrorCode::kManifestParse, std::string("index.json: ") + e.what());
      }
      fdbench::BenchmarkResult result;
      for (const auto& entry : index.at("scores")) {
        const auto method = fdbench::parse_score_method(entry.at("score").get<std::string>());
        const auto seed = entry.at("seed").get<std::int64_t>();
        const auto scored = fdbench::read_scores_csv(fs::path(in) / entry.at("file").get<std::string>(), method);
        try {
          result.reports.push_back(fdbench::evaluate(scored, seed, options));
        } catch (const fdbench::Error& e) {
          result.skipped.push_back({std::string(fdbench::to_string(method)), seed, std::string(e.name()), e.what()});
        }
      }
      for (const auto& s : index.at("skipped")) {
        result.skipped.push_back({s.at("score"), s.at("seed"), s.at("error"), s.at("reason")});
      }
      result.aggregation = fdbench::aggregate_seeds(result.reports);
      result.provenance.toolkit_version = std::string(fdbench::toolkit_version());
      fdbench::emit_report(result, out);
      std::cout << (fs::path(out) / "results.json").string() << '\n';
    } else if (run->parsed()) {
      const auto config = load_config(config_path, scores, strict);
      const auto dir = output_dir(out, config);
      const auto result = fdbench::run_benchmark(config);
      fdbench::emit_report(result, dir);
      std::cout << json{{"results", (dir / "results.json").string()},
                        {"reports", result.reports.size()},
                        {"skipped", result.skipped.size()}}
                       .dump()
                << '\n';
    } else if (report->parsed()) {
      fdbench::emit_report(fdbench::load_results(in), out);
      std::cout << (fs::path(out) / "results.json").string() << '\n';
    }
  } catch (const fdbench::Error& e) {
    return fail(std::string(e.name()), e.what());
  } catch (const json::exception& e) {
    return fail("invalid_field", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
