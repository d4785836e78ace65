#include "fdbench/synthetic.hpp"

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdbench/artifact.hpp"
#include "fdbench/error.hpp"
#include "fdbench/rng.hpp"

namespace fdbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Data {
  std::vector<double> embeddings;  // n x D
  std::vector<std::int32_t> labels;
};

struct Readout {
  std::vector<double> weight;  // C x D
  std::vector<double> bias;
};

Data sample_data(const SyntheticConfig& cfg, std::size_t n, Rng& rng) {
  const auto d = cfg.embed_dim;
  Data data;
  data.embeddings.resize(n * d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::int32_t>(i % cfg.n_classes);
    data.labels[i] = y;
    for (std::size_t k = 0; k < d; ++k) {
      const double mean = k == static_cast<std::size_t>(y) ? cfg.separation : 0.0;
      data.embeddings[i * d + k] = mean + rng.normal();
    }
  }
  return data;
}

Readout make_readout(const SyntheticConfig& cfg, Rng& rng) {
  const auto c = cfg.n_classes;
  const auto d = cfg.embed_dim;
  Readout r{std::vector<double>(c * d), std::vector<double>(c)};
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double mean = k == j ? cfg.separation : 0.0;
      r.weight[j * d + k] = mean + cfg.weight_noise * rng.normal();
    }
    r.bias[j] = -0.5 * cfg.separation * cfg.separation + cfg.weight_noise * rng.normal();
  }
  return r;
}

PredictionArtifact make_artifact(const SyntheticConfig& cfg, const Data& data, const Readout& r,
                                 std::size_t passes, Split split, Rng& rng,
                                 std::map<std::string, std::string> meta) {
  const auto n = data.labels.size();
  const auto c = cfg.n_classes;
  const auto d = cfg.embed_dim;
  PredictionArtifact a;
  a.n_samples = n;
  a.n_passes = passes;
  a.n_classes = c;
  a.embed_dim = d;
  a.split = split;
  a.labels = data.labels;
  a.meta = std::move(meta);
  a.embeddings.assign(data.embeddings.begin(), data.embeddings.end());
  a.last_weight.assign(r.weight.begin(), r.weight.end());
  a.last_bias.assign(r.bias.begin(), r.bias.end());
  a.logits.resize(n * passes * c);

  // Dropout on the embedding only when there is more than one pass.
  const double keep = 1.0 - cfg.dropout;
  std::vector<double> e(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < passes; ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        double v = data.embeddings[i * d + k];
        if (passes > 1) v = rng.bernoulli(keep) ? v / keep : 0.0;
        e[k] = v;
      }
      for (std::size_t j = 0; j < c; ++j) {
        double z = r.bias[j];
        for (std::size_t k = 0; k < d; ++k) z += r.weight[j * d + k] * e[k];
        a.logits[(i * passes + t) * c + j] =
            static_cast<float>(z + cfg.logit_noise * rng.normal());
      }
    }
  }
  return a;
}

}  // namespace

fs::path generate_synthetic(const SyntheticConfig& cfg, const fs::path& out) {
  if (!(cfg.separation >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "separation must be non-negative");
  }
  if (cfg.n_classes < 2 || cfg.embed_dim < cfg.n_classes) {
    throw Error(ErrorCode::kInvalidArgument, "need n_classes >= 2 and embed_dim >= n_classes");
  }
  if (cfg.n_train == 0 || cfg.n_val == 0 || cfg.n_test == 0 || cfg.n_seeds == 0) {
    throw Error(ErrorCode::kInvalidArgument, "split sizes and n_seeds must be positive");
  }
  if (cfg.mc_passes < 2 || !(cfg.dropout > 0.0 && cfg.dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mc_passes must be >= 2 and dropout in (0, 1)");
  }

  // One dataset, shared by every seed and ensemble member.
  Rng data_rng(cfg.seed);
  const auto train = sample_data(cfg, cfg.n_train, data_rng);
  const auto val = sample_data(cfg, cfg.n_val, data_rng);
  const auto test = sample_data(cfg, cfg.n_test, data_rng);

  json seeds = json::array();
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    Rng rng(cfg.seed + 1 + s);
    const auto readout = make_readout(cfg, rng);
    const auto dir = "seed_" + std::to_string(s);
    const std::map<std::string, std::string> meta{{"dataset", "synthetic"},
                                                  {"seed", std::to_string(s)}};
    write_artifact(make_artifact(cfg, train, readout, 1, Split::kTrain, rng, meta), out / dir / "train");
    write_artifact(make_artifact(cfg, val, readout, 1, Split::kVal, rng, meta), out / dir / "val");
    write_artifact(make_artifact(cfg, test, readout, 1, Split::kTest, rng, meta), out / dir / "test");
    auto mc_meta = meta;
    mc_meta["passes"] = "mc-dropout";
    write_artifact(make_artifact(cfg, val, readout, cfg.mc_passes, Split::kVal, rng, mc_meta),
                   out / dir / "mc_val");
    write_artifact(make_artifact(cfg, test, readout, cfg.mc_passes, Split::kTest, rng, mc_meta),
                   out / dir / "mc_test");
    seeds.push_back({{"seed", s},
                     {"train", dir + "/train"},
                     {"val", dir + "/val"},
                     {"test", dir + "/test"},
                     {"mc_val", dir + "/mc_val"},
                     {"mc_test", dir + "/mc_test"}});
  }

  json members = json::array();
  for (std::size_t m = 0; m < cfg.ensemble_members; ++m) {
    Rng rng(cfg.seed + 1000 + m);
    const auto readout = make_readout(cfg, rng);
    const auto dir = "ensemble/member_" + std::to_string(m);
    const std::map<std::string, std::string> meta{{"dataset", "synthetic"},
                                                  {"member", std::to_string(m)}};
    write_artifact(make_artifact(cfg, val, readout, 1, Split::kVal, rng, meta), out / dir / "val");
    write_artifact(make_artifact(cfg, test, readout, 1, Split::kTest, rng, meta), out / dir / "test");
    members.push_back({{"val", dir + "/val"}, {"test", dir + "/test"}});
  }

  json config{{"seeds", seeds},
              {"scores",
               {"msp", "doctor", "neg-entropy", "mc-msp", "mc-entropy", "ensemble-msp", "trustscore",
                "centroid-rbf", "laplace", "confidnet"}},
              {"metrics", {{"target_tpr", 0.8}, {"ece_bins", 15}}},
              {"laplace", {{"selection", "marglik"}}},
              {"confidnet", {{"hidden", 64}, {"max_epochs", 60}}},
              {"output_dir", "results"}};
  if (cfg.ensemble_members >= 3) {
    config["ensemble"] = {{"members", members}, {"size", 3}};
  }
  const auto path = out / "run_config.json";
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file << config.dump(2) << '\n';
  return path;
}

}  // namespace fdbench
