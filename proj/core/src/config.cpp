#include "fdbench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdbench/error.hpp"

namespace fdbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const json& node, const char* key, const fs::path& base) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorCode::kConfig, std::string("'") + key + "' must be a path string");
  fs::path p = it->get<std::string>();
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

void reject_unknown_keys(const json& node, std::initializer_list<const char*> known,
                         const std::string& where) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : node.items()) {
    if (!allowed.contains(item.key())) {
      throw Error(ErrorCode::kConfig, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& node, const char* key, T fallback) {
  const auto it = node.find(key);
  if (it == node.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

void require_exists(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!p.empty() && !fs::exists(p, ec)) {
    throw Error(ErrorCode::kConfig, what + " path does not exist: " + p.string());
  }
}

std::string_view policy_name(ThresholdPolicy p) {
  switch (p) {
    case ThresholdPolicy::kNone: return "none";
    case ThresholdPolicy::kFixed: return "fixed";
    case ThresholdPolicy::kFprTarget: return "fpr-target";
  }
  return "none";
}

std::string_view prior_name(PriorPolicy p) {
  switch (p) {
    case PriorPolicy::kFixed: return "fixed";
    case PriorPolicy::kMarginalLikelihood: return "marglik";
    case PriorPolicy::kValidationNll: return "val-nll";
  }
  return "fixed";
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  reject_unknown_keys(root,
                      {"seeds", "ensemble", "scores", "binary_threshold", "metrics", "laplace",
                       "confidnet", "output_dir", "strict"},
                      "config");

  RunConfig config;
  const auto seeds = root.find("seeds");
  if (seeds == root.end() || !seeds->is_array()) {
    throw Error(ErrorCode::kConfig, "config needs a 'seeds' array");
  }
  for (const auto& node : *seeds) {
    reject_unknown_keys(node, {"seed", "train", "val", "test", "mc_val", "mc_test"}, "seeds[]");
    SeedPaths s;
    s.seed = get_or<std::int64_t>(node, "seed", static_cast<std::int64_t>(config.seeds.size()));
    s.train = resolve(node, "train", base_dir);
    s.val = resolve(node, "val", base_dir);
    s.test = resolve(node, "test", base_dir);
    s.mc_val = resolve(node, "mc_val", base_dir);
    s.mc_test = resolve(node, "mc_test", base_dir);
    config.seeds.push_back(std::move(s));
  }

  if (const auto ens = root.find("ensemble"); ens != root.end() && !ens->is_null()) {
    reject_unknown_keys(*ens, {"members", "size"}, "ensemble");
    EnsembleConfig e;
    e.size = get_or<std::size_t>(*ens, "size", 3);
    for (const auto& m : ens->value("members", json::array())) {
      e.members.push_back({resolve(m, "val", base_dir), resolve(m, "test", base_dir)});
    }
    config.ensemble = std::move(e);
  }

  const bool explicit_scores = root.contains("scores");
  for (const auto& name : get_or<std::vector<std::string>>(root, "scores", {})) {
    config.scores.push_back(parse_score_method(name));
  }

  if (const auto th = root.find("binary_threshold"); th != root.end()) {
    reject_unknown_keys(*th, {"policy", "value", "target_fpr"}, "binary_threshold");
    const auto policy = get_or<std::string>(*th, "policy", "none");
    if (policy == "none") {
      config.threshold.policy = ThresholdPolicy::kNone;
    } else if (policy == "fixed") {
      config.threshold.policy = ThresholdPolicy::kFixed;
    } else if (policy == "fpr-target") {
      config.threshold.policy = ThresholdPolicy::kFprTarget;
    } else {
      throw Error(ErrorCode::kConfig, "binary_threshold.policy must be none, fixed or fpr-target");
    }
    config.threshold.value = get_or<double>(*th, "value", 0.5);
    config.threshold.target_fpr = get_or<double>(*th, "target_fpr", 0.2);
  }

  if (const auto m = root.find("metrics"); m != root.end()) {
    reject_unknown_keys(*m, {"target_tpr", "ece_bins"}, "metrics");
    config.metrics.target_tpr = get_or<double>(*m, "target_tpr", 0.8);
    config.metrics.ece_bins = get_or<std::size_t>(*m, "ece_bins", 15);
  }

  if (const auto l = root.find("laplace"); l != root.end()) {
    reject_unknown_keys(*l, {"prior_precision", "include_bias", "selection", "grid"}, "laplace");
    config.laplace.options.prior_precision = get_or<double>(*l, "prior_precision", 1.0);
    config.laplace.options.include_bias = get_or<bool>(*l, "include_bias", false);
    config.laplace.grid = get_or<std::vector<double>>(*l, "grid", config.laplace.grid);
    const auto sel = get_or<std::string>(*l, "selection", "fixed");
    if (sel == "fixed") {
      config.laplace.selection = PriorPolicy::kFixed;
    } else if (sel == "marglik") {
      config.laplace.selection = PriorPolicy::kMarginalLikelihood;
    } else if (sel == "val-nll") {
      config.laplace.selection = PriorPolicy::kValidationNll;
    } else {
      throw Error(ErrorCode::kConfig, "laplace.selection must be fixed, marglik or val-nll");
    }
  }

  if (const auto c = root.find("confidnet"); c != root.end()) {
    reject_unknown_keys(*c, {"hidden", "batch_size", "learning_rate", "max_epochs", "patience", "seed"},
                        "confidnet");
    auto& cn = config.confidnet;
    cn.hidden = get_or<std::size_t>(*c, "hidden", cn.hidden);
    cn.batch_size = get_or<std::size_t>(*c, "batch_size", cn.batch_size);
    cn.learning_rate = get_or<double>(*c, "learning_rate", cn.learning_rate);
    cn.max_epochs = get_or<std::size_t>(*c, "max_epochs", cn.max_epochs);
    cn.patience = get_or<std::size_t>(*c, "patience", cn.patience);
    cn.seed = get_or<std::uint64_t>(*c, "seed", cn.seed);
  }

  if (!explicit_scores) config.scores = default_score_suite(config.threshold);
  config.output_dir = resolve(root, "output_dir", base_dir);
  config.strict = get_or<bool>(root, "strict", false);
  finalize_run_config(config);
  return config;
}

std::vector<ScoreMethod> default_score_suite(const ThresholdConfig& threshold) {
  // A threshold other than 0.5 changes the predicted class but not the
  // entropy, so entropy scores are left out of the default binary suite.
  const bool shifted = threshold.policy == ThresholdPolicy::kFprTarget ||
                       (threshold.policy == ThresholdPolicy::kFixed && threshold.value != 0.5);
  std::vector<ScoreMethod> out;
  for (auto m : kAllScoreMethods) {
    if (shifted && (m == ScoreMethod::kNegEntropy || m == ScoreMethod::kMcEntropy)) continue;
    out.push_back(m);
  }
  return out;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), file.parent_path());
}

void finalize_run_config(RunConfig& config) {
  if (config.seeds.empty()) throw Error(ErrorCode::kConfig, "config lists no seeds");
  if (config.scores.empty()) throw Error(ErrorCode::kConfig, "config lists no scores");
  std::set<ScoreMethod> unique(config.scores.begin(), config.scores.end());
  if (unique.size() != config.scores.size()) {
    throw Error(ErrorCode::kConfig, "score list contains duplicates");
  }
  std::set<std::int64_t> seed_ids;
  for (const auto& s : config.seeds) {
    if (!seed_ids.insert(s.seed).second) {
      throw Error(ErrorCode::kConfig, "seed " + std::to_string(s.seed) + " listed twice");
    }
    if (s.test.empty()) {
      throw Error(ErrorCode::kConfig, "seed " + std::to_string(s.seed) + " has no test artifact");
    }
    require_exists(s.train, "train");
    require_exists(s.val, "val");
    require_exists(s.test, "test");
    require_exists(s.mc_val, "mc_val");
    require_exists(s.mc_test, "mc_test");
    if (config.threshold.policy == ThresholdPolicy::kFprTarget && s.val.empty()) {
      throw Error(ErrorCode::kConfig, "fpr-target threshold policy needs a val split for seed " +
                                          std::to_string(s.seed));
    }
  }
  if (config.ensemble) {
    for (const auto& m : config.ensemble->members) {
      if (m.test.empty()) throw Error(ErrorCode::kConfig, "ensemble member without a test path");
      require_exists(m.test, "ensemble test");
      require_exists(m.val, "ensemble val");
      if (config.threshold.policy == ThresholdPolicy::kFprTarget && m.val.empty()) {
        throw Error(ErrorCode::kConfig, "fpr-target threshold policy needs val for every ensemble member");
      }
    }
    if (config.ensemble->size == 0 || config.ensemble->size > config.ensemble->members.size()) {
      throw Error(ErrorCode::kConfig, "ensemble.size must lie in [1, number of members]");
    }
  }
  const auto& th = config.threshold;
  if (th.policy == ThresholdPolicy::kFixed && !(th.value >= 0.0 && th.value <= 1.0)) {
    throw Error(ErrorCode::kConfig, "fixed binary threshold must lie in [0, 1]");
  }
  if (th.policy == ThresholdPolicy::kFprTarget && !(th.target_fpr >= 0.0 && th.target_fpr <= 1.0)) {
    throw Error(ErrorCode::kConfig, "target_fpr must lie in [0, 1]");
  }
  if (!(config.metrics.target_tpr > 0.0 && config.metrics.target_tpr <= 1.0)) {
    throw Error(ErrorCode::kConfig, "metrics.target_tpr must lie in (0, 1]");
  }
  if (config.metrics.ece_bins == 0) throw Error(ErrorCode::kConfig, "metrics.ece_bins must be positive");
  if (!(config.laplace.options.prior_precision > 0.0)) {
    throw Error(ErrorCode::kConfig, "laplace.prior_precision must be positive");
  }
  for (double g : config.laplace.grid) {
    if (!(g > 0.0)) throw Error(ErrorCode::kConfig, "laplace.grid values must be positive");
  }
  if (config.laplace.selection != PriorPolicy::kFixed && config.laplace.grid.empty()) {
    throw Error(ErrorCode::kConfig, "laplace.grid is empty");
  }
  config.canonical_json = to_json_string(config);
}

std::string to_json_string(const RunConfig& config) {
  json seeds = json::array();
  for (const auto& s : config.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"train", s.train.string()},
                     {"val", s.val.string()},
                     {"test", s.test.string()},
                     {"mc_val", s.mc_val.string()},
                     {"mc_test", s.mc_test.string()}});
  }
  json scores = json::array();
  for (auto m : config.scores) scores.push_back(std::string(to_string(m)));
  json root{{"seeds", seeds},
            {"scores", scores},
            {"binary_threshold",
             {{"policy", std::string(policy_name(config.threshold.policy))},
              {"value", config.threshold.value},
              {"target_fpr", config.threshold.target_fpr}}},
            {"metrics",
             {{"target_tpr", config.metrics.target_tpr}, {"ece_bins", config.metrics.ece_bins}}},
            {"laplace",
             {{"prior_precision", config.laplace.options.prior_precision},
              {"include_bias", config.laplace.options.include_bias},
              {"selection", std::string(prior_name(config.laplace.selection))},
              {"grid", config.laplace.grid}}},
            {"confidnet",
             {{"hidden", config.confidnet.hidden},
              {"batch_size", config.confidnet.batch_size},
              {"learning_rate", config.confidnet.learning_rate},
              {"max_epochs", config.confidnet.max_epochs},
              {"patience", config.confidnet.patience},
              {"seed", config.confidnet.seed}}},
            {"output_dir", config.output_dir.string()},
            {"strict", config.strict}};
  if (config.ensemble) {
    json members = json::array();
    for (const auto& m : config.ensemble->members) {
      members.push_back({{"val", m.val.string()}, {"test", m.test.string()}});
    }
    root["ensemble"] = {{"members", members}, {"size", config.ensemble->size}};
  }
  return root.dump();
}

}  // namespace fdbench
