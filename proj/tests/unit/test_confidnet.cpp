#include <cmath>

#include <gtest/gtest.h>

#include "fdbench/confidnet.hpp"
#include "fdbench/error.hpp"
#include "fdbench/metrics.hpp"
#include "confidnet_support.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

using oracle::gradient_check;

// Binary artifact whose true-class probability is `tcp` for every sample,
// always predicted correctly when tcp > 0.5.
fdbench::PredictionArtifact constant_tcp(fdbench::Rng& rng, std::size_t n, double tcp) {
  fdbench::PredictionArtifact a;
  a.n_samples = n;
  a.n_classes = 2;
  a.embed_dim = 3;
  const auto margin = static_cast<float>(std::log(tcp / (1.0 - tcp)));
  for (std::size_t i = 0; i < n; ++i) {
    a.logits.push_back(margin);
    a.logits.push_back(0.0f);
    a.labels.push_back(0);
    for (int k = 0; k < 3; ++k) a.embeddings.push_back(static_cast<float>(rng.normal()));
  }
  return a;
}

// Noisy 3-class split where the true-class probability depends on the
// embedding, so some predictions are wrong.
fdbench::PredictionArtifact mixed_split(fdbench::Rng& rng, std::size_t n) {
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
    for (int c = 0; c < 3; ++c) a.logits.push_back(2.0f * e[static_cast<std::size_t>(c)]);
  }
  return a;
}

}  // namespace

TEST(ConfidNet, FiveParameterGradientCheck) {
  fdbench::ConfidNetModel model({2, 1, 1}, 3);
  ASSERT_EQ(model.parameter_count(), 5u);
  // Keep the hidden unit active.
  model.set_parameters(std::vector<double>{0.7, -0.4, 0.3, 1.2, -0.2});
  Eigen::MatrixXd x(4, 2);
  x << 1.0, 0.5, 0.2, -0.3, 0.9, 0.1, 0.4, 0.4;
  Eigen::VectorXd y(4);
  y << 0.9, 0.1, 0.6, 0.3;
  EXPECT_LT(gradient_check(model, x, y), 1e-4);
}

TEST(ConfidNet, GradientCheckAllLayers) {
  fdbench::Rng rng(59);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    fdbench::ConfidNetModel model({4, 6, 5, 1}, seed);
    Eigen::MatrixXd x(8, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) y(i) = rng.uniform();
    oracle::move_off_kinks(model, x, rng);
    EXPECT_LT(gradient_check(model, x, y), 1e-4) << "seed " << seed;
  }
}

TEST(ConfidNet, OutputInOpenUnitInterval) {
  const fdbench::ConfidNetModel model({3, 8, 8, 1}, 1);
  fdbench::Rng rng(61);
  for (int t = 0; t < 200; ++t) {
    std::vector<float> e(3);
    for (auto& v : e) v = static_cast<float>(10.0 * rng.normal());
    const double s = fdbench::confidnet_score(model, e);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    EXPECT_EQ(s, fdbench::confidnet_score(model, e));
  }
}

TEST(ConfidNet, TcpTargets) {
  fdbench::PredictionArtifact a;
  a.n_samples = 3;
  a.n_classes = 2;
  a.logits = {static_cast<float>(std::log(0.7 / 0.3)), 0.0f, 1000.0f, 0.0f, 0.0f, 0.0f};
  a.labels = {1, 0, 1};
  const auto t = fdbench::make_tcp_targets(a);
  EXPECT_NEAR(t[0], 0.3, 1e-7);
  EXPECT_DOUBLE_EQ(t[1], 1.0);
  EXPECT_DOUBLE_EQ(t[2], 0.5);
}

TEST(ConfidNet, ZeroEpochsKeepsInitialisation) {
  fdbench::Rng rng(67);
  const auto train = mixed_split(rng, 50);
  const auto val = mixed_split(rng, 50);
  fdbench::ConfidNetConfig cfg;
  cfg.hidden = 8;
  cfg.max_epochs = 0;
  cfg.seed = 4;
  const auto fit = fdbench::train_confidnet(train, val, cfg);
  EXPECT_EQ(fit.selected_epoch, 0u);
  EXPECT_EQ(fit.model.parameters(), fdbench::ConfidNetModel({4, 8, 8, 1}, 4).parameters());
}

TEST(ConfidNet, LearnsAConstantTarget) {
  fdbench::Rng rng(71);
  const auto train = constant_tcp(rng, 256, 0.7);
  const auto val = constant_tcp(rng, 64, 0.7);
  fdbench::ConfidNetConfig cfg;
  cfg.hidden = 16;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 200;
  const auto fit = fdbench::train_confidnet(train, val, cfg);
  EXPECT_FALSE(fit.selected_by_aupr);  // no validation errors
  for (std::size_t i = 0; i < train.n_samples; ++i) {
    EXPECT_NEAR(fdbench::confidnet_score(fit.model, train.embedding(i)), 0.7, 0.05);
  }
}

TEST(ConfidNet, TrainingIsBitwiseReproducible) {
  fdbench::Rng rng(73);
  const auto train = mixed_split(rng, 300);
  const auto val = mixed_split(rng, 100);
  fdbench::ConfidNetConfig cfg;
  cfg.hidden = 16;
  cfg.max_epochs = 10;
  cfg.batch_size = 32;
  const auto a = fdbench::train_confidnet(train, val, cfg);
  const auto b = fdbench::train_confidnet(train, val, cfg);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.selected_epoch, b.selected_epoch);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].val_aupr, b.history[i].val_aupr);
}

TEST(ConfidNet, SelectsBestValidationAupr) {
  fdbench::Rng rng(79);
  const auto train = mixed_split(rng, 300);
  const auto val = mixed_split(rng, 150);
  fdbench::ConfidNetConfig cfg;
  cfg.hidden = 16;
  cfg.max_epochs = 20;
  const auto fit = fdbench::train_confidnet(train, val, cfg);
  ASSERT_TRUE(fit.selected_by_aupr);
  double best = -1.0;
  for (const auto& h : fit.history) best = std::max(best, h.val_aupr);
  EXPECT_EQ(fit.history[fit.selected_epoch].val_aupr, best);
}

TEST(ConfidNet, AveragePrecisionMatchesSweep) {
  fdbench::Rng rng(83);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const auto s = oracle::tied_scores(rng, n);
    const auto y = oracle::mixed_labels(rng, n, 0.3);
    EXPECT_NEAR(fdbench::average_precision(s, y), oracle::average_precision_sweep(s, y), 1e-12);
  }
}

TEST(ConfidNet, CheckpointRoundTrip) {
  TempDir tmp;
  const fdbench::ConfidNetModel model({3, 5, 5, 1}, 9);
  fdbench::save_confidnet(model, tmp.path());
  const auto loaded = fdbench::load_confidnet(tmp.path());
  EXPECT_EQ(loaded.sizes(), model.sizes());
  const auto a = model.parameters();
  const auto b = loaded.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], static_cast<double>(static_cast<float>(a[i])));
}

TEST(ConfidNet, NeedsEmbeddings) {
  fdbench::Rng rng(89);
  auto train = mixed_split(rng, 20);
  train.embed_dim = 0;
  train.embeddings.clear();
  try {
    fdbench::train_confidnet(train, mixed_split(rng, 20), {});
    FAIL();
  } catch (const fdbench::Error& e) {
    EXPECT_EQ(e.code(), fdbench::ErrorCode::kMissingEmbeddings);
  }
}
