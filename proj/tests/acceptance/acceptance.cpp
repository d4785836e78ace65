// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidnet_support.hpp"
#include "fdbench/artifact.hpp"
#include "fdbench/config.hpp"
#include "fdbench/confidnet.hpp"
#include "fdbench/error.hpp"
#include "fdbench/harness.hpp"
#include "fdbench/laplace.hpp"
#include "fdbench/metrics.hpp"
#include "fdbench/synthetic.hpp"
#include "fdbench/toy.hpp"
#include "fdbench/trust_score.hpp"
#include "laplace_oracles.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s %s (%.2fs): %s\n", out.pass ? "PASS" : "FAIL", name, secs, out.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome toy() {
  const auto start = Clock::now();
  const auto r = fdbench::run_toy_experiment(10000, 0, 15);
  const double secs = seconds_since(start);
  const bool same = std::bit_cast<std::uint64_t>(r.auc_model1) == std::bit_cast<std::uint64_t>(r.auc_model2);
  const bool pass = r.ece_model1 <= 0.03 && r.ece_model2 >= 0.40 && r.ece_model2 <= 0.50 && same &&
                    r.auc_model1 >= 0.80 && r.auc_model1 <= 0.84 && secs < 5.0;
  return {pass, fmt("ece1=%.4f ece2=%.4f auc=%.6f bitwise_equal=%d runtime=%.3fs", r.ece_model1,
                    r.ece_model2, r.auc_model1, same ? 1 : 0, secs)};
}

Outcome auc_oracle() {
  fdbench::Rng rng(1001);
  const auto start = Clock::now();
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const auto s = oracle::tied_scores(rng, n);
    const auto y = oracle::mixed_labels(rng, n);
    if (fdbench::roc_auc(s, y) != oracle::auc_pairs(s, y)) ++mismatches;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0, fmt("1000 instances, %zu mismatches, runtime=%.3fs", mismatches, secs)};
}

Outcome threshold_sweeps() {
  fdbench::Rng rng(1002);
  std::size_t fpr_bad = 0;
  std::size_t thr_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const auto s = oracle::tied_scores(rng, n);
    const auto y = oracle::mixed_labels(rng, n);
    if (fdbench::fpr_at_tpr(s, y, 0.8) != oracle::fpr_at_tpr_sweep(s, y, 0.8)) ++fpr_bad;
    const double target = static_cast<double>(rng.below(11)) / 10.0;
    if (fdbench::select_threshold_at_fpr(s, y, target) != oracle::threshold_sweep(s, y, target)) ++thr_bad;
  }
  return {fpr_bad == 0 && thr_bad == 0,
          fmt("1000 instances, fpr_at_tpr mismatches=%zu, threshold mismatches=%zu", fpr_bad, thr_bad)};
}

Outcome rank_invariance() {
  fdbench::Rng rng(1003);
  const std::vector<double (*)(double)> transforms{
      [](double x) { return 3.0 * x + 1.0; },
      [](double x) { return std::exp(x); },
      [](double x) { return x * x * x + x; },
      [](double x) { return std::atan(x); },
      [](double x) { return std::log1p(x) - 7.0; },
  };
  std::size_t changed = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const auto s = oracle::tied_scores(rng, n);
    const auto y = oracle::mixed_labels(rng, n);
    const double auc = fdbench::roc_auc(s, y);
    const double fpr = fdbench::fpr_at_tpr(s, y);
    const auto rc = fdbench::risk_coverage(s, y);
    for (auto f : transforms) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = f(s[i]);
      if (fdbench::roc_auc(g, y) != auc || fdbench::fpr_at_tpr(g, y) != fpr || fdbench::risk_coverage(g, y) != rc) {
        ++changed;
      }
    }
  }
  return {changed == 0, fmt("100 vectors x 5 transforms, %zu changed", changed)};
}

Outcome trust_brute_force() {
  fdbench::Rng rng(1004);
  std::size_t mismatches = 0;
  std::size_t queries = 0;
  for (int t = 0; t < 200; ++t) {
    fdbench::PredictionArtifact a;
    a.n_classes = 2 + rng.below(4);
    a.n_samples = a.n_classes + rng.below(501 - a.n_classes);
    a.embed_dim = 1 + rng.below(16);
    a.split = fdbench::Split::kTrain;
    a.logits.assign(a.n_samples * a.n_classes, 0.0f);
    for (std::size_t i = 0; i < a.n_samples; ++i) {
      a.labels.push_back(static_cast<std::int32_t>(i < a.n_classes ? i : rng.below(a.n_classes)));
    }
    // Coarse grid values so exact duplicates and equal distances occur.
    for (std::size_t i = 0; i < a.n_samples * a.embed_dim; ++i) {
      a.embeddings.push_back(rng.bernoulli(0.3) ? static_cast<float>(rng.below(3))
                                                : static_cast<float>(rng.normal()));
    }
    const auto model = fdbench::fit_trustscore(a);
    for (int q = 0; q < 10; ++q) {
      std::vector<float> e(a.embed_dim);
      if (q == 0) {
        e.assign(a.embeddings.begin(), a.embeddings.begin() + static_cast<std::ptrdiff_t>(a.embed_dim));
      } else {
        for (auto& v : e) v = static_cast<float>(rng.normal());
      }
      const int pred = static_cast<int>(rng.below(a.n_classes));
      ++queries;
      if (fdbench::trustscore(model, e, pred) !=
          oracle::trust_scan(a.embed_dim, a.embeddings, a.labels, e, pred, fdbench::kTrustScoreCap)) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("200 instances, %zu queries, %zu mismatches", queries, mismatches)};
}

Outcome laplace_ggn() {
  fdbench::Rng rng(1005);
  const auto train = oracle::laplace_instance(rng, 50, 4, 3);
  const auto map = fdbench::last_layer_from(train);
  const auto post = fdbench::fit_laplace(train, map);
  const auto fd_bias = oracle::fd_hessian(map.bias, [&](const Eigen::VectorXd& b) {
    return oracle::cross_entropy(train, map.weight, b);
  });
  const double bias_err = oracle::max_relative_error(fd_bias, 50.0 * post.kron_b());

  // With one shared embedding the weight Hessian is exactly N (B kron A).
  const auto shared = oracle::laplace_instance(rng, 50, 4, 3, true);
  const auto smap = fdbench::last_layer_from(shared);
  const auto spost = fdbench::fit_laplace(shared, smap);
  Eigen::VectorXd w0(12);
  for (Eigen::Index c = 0; c < 3; ++c) {
    for (Eigen::Index k = 0; k < 4; ++k) w0(c * 4 + k) = smap.weight(c, k);
  }
  const auto fd_w = oracle::fd_hessian(w0, [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd w(3, 4);
    for (Eigen::Index c = 0; c < 3; ++c) {
      for (Eigen::Index k = 0; k < 4; ++k) w(c, k) = x(c * 4 + k);
    }
    return oracle::cross_entropy(shared, w, smap.bias);
  });
  Eigen::MatrixXd kron(12, 12);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      kron.block(i * 4, j * 4, 4, 4) = 50.0 * spost.kron_b()(i, j) * spost.kron_a();
    }
  }
  const double kron_err = oracle::max_relative_error(fd_w, kron);
  return {bias_err < 1e-4 && kron_err < 1e-4,
          fmt("N=50 D=4 C=3, bias-direction rel err=%.2e, shared-embedding weight rel err=%.2e", bias_err,
              kron_err)};
}

Outcome laplace_probit() {
  double worst = 0.0;
  std::size_t points = 0;
  for (std::uint64_t inst = 0; inst < 6; ++inst) {
    fdbench::Rng rng(1006 + inst);
    const auto train = oracle::laplace_instance(rng, 50, 4, 3);
    const auto post = fdbench::fit_laplace(train, fdbench::last_layer_from(train));
    const Eigen::MatrixXd cov = post.dense_covariance();
    for (std::size_t i = 0; i < 10; ++i) {
      const auto e = train.embedding(i);
      Eigen::VectorXd ev(4);
      for (Eigen::Index k = 0; k < 4; ++k) ev(k) = e[static_cast<std::size_t>(k)];
      const auto probit = fdbench::laplace_predictive(post, e);
      const auto mc = oracle::mc_predictive(post.map().weight, post.map().bias, cov, ev, 100000, 17 * inst + i);
      double tv = 0.0;
      for (Eigen::Index c = 0; c < 3; ++c) tv += 0.5 * std::abs(probit[static_cast<std::size_t>(c)] - mc(c));
      worst = std::max(worst, tv);
      ++points;
    }
  }
  return {worst < 0.05, fmt("%zu points over 6 posteriors, 100000 MC samples each, max TV=%.4f", points, worst)};
}

Outcome laplace_map_limit() {
  fdbench::Rng rng(1007);
  const auto train = oracle::laplace_instance(rng, 50, 4, 3);
  const auto post = fdbench::fit_laplace(train, fdbench::last_layer_from(train), {1e8, false});
  double worst = 0.0;
  for (std::size_t i = 0; i < train.n_samples; ++i) {
    const Eigen::VectorXd f = post.latent_mean(train.embedding(i));
    const auto map = fdbench::softmax(std::span<const double>(f.data(), 3));
    const auto pred = fdbench::laplace_predictive(post, train.embedding(i));
    for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(pred[c] - map[c]));
  }
  return {worst < 1e-4, fmt("prior precision 1e8, max |p - p_map|=%.2e", worst)};
}

Outcome confidnet_gradient() {
  fdbench::Rng rng(1008);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    fdbench::ConfidNetModel model({4, 6, 5, 1}, seed);
    Eigen::MatrixXd x(8, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) y(i) = rng.uniform();
    oracle::move_off_kinks(model, x, rng);
    worst = std::max(worst, oracle::gradient_check(model, x, y));
  }
  return {worst < 1e-4, fmt("network 4-6-5-1, 5 inits, all %zu parameters, max rel err=%.2e",
                            fdbench::ConfidNetModel({4, 6, 5, 1}, 0).parameter_count(), worst)};
}

fdbench::PredictionArtifact noisy_split(fdbench::Rng& rng, std::size_t n) {
  fdbench::PredictionArtifact a;
  a.n_samples = n;
  a.n_classes = 3;
  a.embed_dim = 4;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::int32_t>(rng.below(3));
    a.labels.push_back(y);
    std::vector<float> e(4);
    for (auto& v : e) v = static_cast<float>(rng.normal());
    e[static_cast<std::size_t>(y)] += 1.5f;
    a.embeddings.insert(a.embeddings.end(), e.begin(), e.end());
    for (std::size_t c = 0; c < 3; ++c) a.logits.push_back(2.0f * e[c]);
  }
  return a;
}

Outcome confidnet_reproducible() {
  fdbench::Rng rng(1009);
  const auto train = noisy_split(rng, 400);
  const auto val = noisy_split(rng, 150);
  fdbench::ConfidNetConfig cfg;
  cfg.hidden = 32;
  cfg.max_epochs = 20;
  cfg.batch_size = 32;
  cfg.seed = 11;
  const auto a = fdbench::train_confidnet(train, val, cfg);
  const auto b = fdbench::train_confidnet(train, val, cfg);
  const auto pa = a.model.parameters();
  const auto pb = b.model.parameters();
  bool same = pa.size() == pb.size() && a.selected_epoch == b.selected_epoch;
  for (std::size_t i = 0; same && i < pa.size(); ++i) {
    same = std::bit_cast<std::uint64_t>(pa[i]) == std::bit_cast<std::uint64_t>(pb[i]);
  }
  return {same, fmt("two runs, seed 11, %zu parameters, selected epoch %zu, bitwise equal=%d", pa.size(),
                    a.selected_epoch, same ? 1 : 0)};
}

Outcome synthetic_pipeline() {
  TempDir tmp;
  const auto start = Clock::now();
  const auto config_path = fdbench::generate_synthetic(fdbench::SyntheticConfig{}, tmp.path());
  const auto result = fdbench::run_benchmark(fdbench::load_run_config(config_path));
  const double secs = seconds_since(start);

  std::set<std::string> ran;
  double acc = 0.0;
  double msp_min = 1.0;
  std::size_t msp_n = 0;
  for (const auto& r : result.reports) {
    ran.insert(r.score);
    if (r.score == "msp") {
      acc += r.accuracy;
      msp_min = std::min(msp_min, r.roc_auc_error_detection);
      ++msp_n;
    }
  }
  acc = msp_n ? acc / static_cast<double>(msp_n) : 0.0;
  const std::size_t expected = std::size(fdbench::kAllScoreMethods);
  const bool pass = ran.size() == expected && result.skipped.empty() && msp_n > 0 && acc >= 0.82 &&
                    acc <= 0.88 && msp_min > 0.75 && secs < 60.0;
  return {pass, fmt("mean accuracy=%.4f, methods run=%zu/%zu, skipped=%zu, min msp AUC=%.4f over %zu seeds, "
                    "runtime=%.2fs",
                    acc, ran.size(), expected, result.skipped.size(), msp_min, msp_n, secs)};
}

Outcome artifact_round_trip() {
  fdbench::Rng rng(1010);
  TempDir tmp;
  std::size_t bad = 0;
  for (int t = 0; t < 100; ++t) {
    const auto a = oracle::random_artifact(rng, rng.bernoulli(0.7), rng.bernoulli(0.5));
    const auto dir = tmp / ("a" + std::to_string(t));
    fdbench::write_artifact(a, dir);
    if (!fdbench::bitwise_equal(a, fdbench::read_artifact(dir))) ++bad;
  }
  return {bad == 0, fmt("100 random artifacts, %zu differ", bad)};
}

Outcome malformed_artifacts() {
  using fdbench::ErrorCode;
  TempDir tmp;
  fdbench::PredictionArtifact small;
  small.n_samples = 2;
  small.n_classes = 2;
  small.logits = {1.0f, -1.0f, 0.25f, 0.5f};
  small.labels = {0, 1};
  small.split = fdbench::Split::kVal;

  std::vector<std::string> wrong;
  int cases = 0;
  auto expect = [&](const std::string& what, ErrorCode code, const std::function<void(const fs::path&)>& damage) {
    ++cases;
    const auto dir = tmp / ("case" + std::to_string(cases));
    fdbench::write_artifact(small, dir);
    damage(dir);
    try {
      fdbench::read_artifact(dir);
      wrong.push_back(what + ": accepted");
    } catch (const fdbench::Error& e) {
      if (e.code() != code) {
        wrong.push_back(what + ": got " + std::string(fdbench::to_string(e.code())));
      }
    }
  };
  auto edit_manifest = [](const std::function<void(json&)>& f) {
    return [f](const fs::path& dir) {
      json m;
      {
        std::ifstream in(dir / "manifest.json");
        m = json::parse(in);
      }
      f(m);
      std::ofstream(dir / "manifest.json", std::ios::trunc) << m.dump();
    };
  };
  auto write_bytes = [](const fs::path& file, const void* data, std::size_t size) {
    std::ofstream(file, std::ios::binary | std::ios::trunc).write(static_cast<const char*>(data),
                                                                    static_cast<std::streamsize>(size));
  };

  expect("no manifest", ErrorCode::kMissingFile, [](const fs::path& d) { fs::remove(d / "manifest.json"); });
  expect("missing tensor file", ErrorCode::kMissingFile, [](const fs::path& d) { fs::remove(d / "labels.bin"); });
  expect("truncated logits", ErrorCode::kShapeMismatch,
         [](const fs::path& d) { fs::resize_file(d / "logits.bin", 12); });
  expect("label out of range", ErrorCode::kLabelOutOfRange, [&](const fs::path& d) {
    const std::int32_t bad[2] = {0, 2};
    write_bytes(d / "labels.bin", bad, sizeof bad);
  });
  expect("negative label", ErrorCode::kLabelOutOfRange, [&](const fs::path& d) {
    const std::int32_t bad[2] = {-1, 0};
    write_bytes(d / "labels.bin", bad, sizeof bad);
  });
  expect("NaN logit", ErrorCode::kNonFinite, [&](const fs::path& d) {
    const float bad[4] = {0.0f, std::numeric_limits<float>::quiet_NaN(), 0.0f, 0.0f};
    write_bytes(d / "logits.bin", bad, sizeof bad);
  });
  expect("unparseable manifest", ErrorCode::kManifestParse,
         [](const fs::path& d) { std::ofstream(d / "manifest.json", std::ios::trunc) << "{ not json"; });
  expect("unsupported version", ErrorCode::kUnsupportedVersion,
         edit_manifest([](json& m) { m["format_version"] = 2; }));
  expect("unknown split", ErrorCode::kInvalidSplit, edit_manifest([](json& m) { m["split"] = "holdout"; }));
  expect("tensor not declared", ErrorCode::kMissingTensor, edit_manifest([](json& m) { m["tensors"].erase(1); }));
  expect("count disagrees with shape", ErrorCode::kShapeMismatch,
         edit_manifest([](json& m) { m["n_samples"] = 3; }));
  expect("one class", ErrorCode::kInvalidField, edit_manifest([](json& m) { m["n_classes"] = 1; }));
  expect("path escapes directory", ErrorCode::kInvalidField,
         edit_manifest([](json& m) { m["tensors"][0]["file"] = "../logits.bin"; }));
  expect("wrong dtype", ErrorCode::kInvalidField,
         edit_manifest([](json& m) { m["tensors"][0]["dtype"] = "int32"; }));

  std::string detail = fmt("%d malformed cases", cases);
  for (const auto& w : wrong) detail += "; " + w;
  return {wrong.empty(), detail};
}

}  // namespace

int main() {
  criterion("toy-experiment", toy);
  criterion("roc-auc-oracle", auc_oracle);
  criterion("fpr-at-tpr-and-threshold-sweeps", threshold_sweeps);
  criterion("rank-invariance", rank_invariance);
  criterion("trustscore-brute-force", trust_brute_force);
  criterion("laplace-ggn-vs-finite-difference", laplace_ggn);
  criterion("laplace-probit-vs-monte-carlo", laplace_probit);
  criterion("laplace-map-limit", laplace_map_limit);
  criterion("confidnet-gradient-check", confidnet_gradient);
  criterion("confidnet-reproducible-training", confidnet_reproducible);
  criterion("synthetic-end-to-end", synthetic_pipeline);
  criterion("artifact-round-trip", artifact_round_trip);
  criterion("artifact-malformed-errors", malformed_artifacts);
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
