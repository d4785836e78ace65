#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fdbench/centroid.hpp"
#include "fdbench/error.hpp"
#include "fdbench/probability.hpp"
#include "fdbench/scores.hpp"
#include "fdbench/trust_score.hpp"
#include "oracles.hpp"

using fdbench::ProbabilityVector;

namespace {

ProbabilityVector pv(std::vector<double> v) { return ProbabilityVector::from_values(std::move(v)); }

// Artifact with one pass of zero logits; only labels and embeddings matter.
fdbench::PredictionArtifact embedded(std::size_t dim, std::size_t classes, std::vector<float> points,
                                     std::vector<std::int32_t> labels) {
  fdbench::PredictionArtifact a;
  a.n_samples = labels.size();
  a.n_classes = classes;
  a.embed_dim = dim;
  a.logits.assign(labels.size() * classes, 0.0f);
  a.labels = std::move(labels);
  a.embeddings = std::move(points);
  return a;
}

}  // namespace

TEST(Softmax, Examples) {
  const auto u = fdbench::softmax(std::vector<double>{0, 0, 0, 0});
  for (double p : u.values()) EXPECT_DOUBLE_EQ(p, 0.25);

  const auto big = fdbench::softmax(std::vector<double>{1000, 0});
  EXPECT_NEAR(big[0], 1.0, 1e-12);
  EXPECT_NEAR(big[1], 0.0, 1e-12);

  const auto third = fdbench::softmax(std::vector<double>{std::numbers::ln2, 0});
  EXPECT_NEAR(third[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(third[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(fdbench::softmax(std::vector<double>{0, NAN}), fdbench::Error);
  EXPECT_THROW(fdbench::softmax(std::vector<double>{INFINITY, 0}), fdbench::Error);
}

TEST(Softmax, ShiftInvariantAndNormalised) {
  fdbench::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(2 + rng.below(8));
    for (auto& v : z) v = 20.0 * rng.normal();
    const auto p = fdbench::softmax(z);
    double sum = 0.0;
    for (double v : p.values()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto shifted = z;
    for (auto& v : shifted) v += 3.5;
    const auto q = fdbench::softmax(shifted);
    for (std::size_t c = 0; c < z.size(); ++c) EXPECT_NEAR(p[c], q[c], 1e-12);
  }
}

TEST(AggregatePasses, Examples) {
  const float ln2 = static_cast<float>(std::numbers::ln2);
  const std::vector<float> row{ln2, 0.0f};
  const auto single = fdbench::softmax(std::span<const float>(row));
  const std::vector<float> same{ln2, 0.0f, ln2, 0.0f, ln2, 0.0f};
  const auto agg = fdbench::aggregate_passes(same, 3);
  EXPECT_NEAR(agg[0], single[0], 1e-15);

  const std::vector<float> extreme{1000.0f, 0.0f, 0.0f, 1000.0f};
  const auto half = fdbench::aggregate_passes(extreme, 2);
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);

  const std::vector<float> swapped{ln2, 0.0f, 0.0f, ln2};
  const auto even = fdbench::aggregate_passes(swapped, 2);
  EXPECT_NEAR(even[0], 0.5, 1e-7);
  EXPECT_NEAR(even[1], 0.5, 1e-7);
}

TEST(AggregatePasses, PermutationInvariantBitwise) {
  fdbench::Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t passes = 2 + rng.below(9);
    const std::size_t classes = 2 + rng.below(5);
    std::vector<float> z(passes * classes);
    for (auto& v : z) v = static_cast<float>(5.0 * rng.normal());
    std::vector<std::size_t> perm(passes);
    for (std::size_t i = 0; i < passes; ++i) perm[i] = i;
    for (std::size_t i = passes - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<float> permuted;
    for (auto p : perm) permuted.insert(permuted.end(), z.begin() + p * classes, z.begin() + (p + 1) * classes);
    const auto a = fdbench::aggregate_passes(z, passes);
    const auto b = fdbench::aggregate_passes(permuted, passes);
    for (std::size_t c = 0; c < classes; ++c) EXPECT_EQ(a[c], b[c]);
  }
}

TEST(PredictClass, Examples) {
  EXPECT_EQ(fdbench::predict_class(pv({0.2, 0.5, 0.3})), 1);
  EXPECT_EQ(fdbench::predict_class(pv({0.7, 0.3}), 0.25), 1);
  EXPECT_EQ(fdbench::predict_class(pv({0.7, 0.3}), 0.5), 0);
  EXPECT_EQ(fdbench::predict_class(pv({0.5, 0.5})), 0);
  EXPECT_EQ(fdbench::predict_class(pv({0.6, 0.4}), 0.4), 1);
  EXPECT_THROW(fdbench::predict_class(pv({0.2, 0.5, 0.3}), 0.5), fdbench::Error);
}

TEST(Msp, Examples) {
  EXPECT_DOUBLE_EQ(fdbench::msp_score(pv({0.7, 0.2, 0.1}), 0), 0.7);
  EXPECT_DOUBLE_EQ(fdbench::msp_score(pv({0.25, 0.25, 0.25, 0.25}), 2), 0.25);
  const auto r = fdbench::make_record(pv({0.6, 0.4}), 0.3);
  EXPECT_EQ(r.predicted_class, 1);
  EXPECT_DOUBLE_EQ(fdbench::msp_score(r), 0.4);
}

TEST(Msp, EqualsMaxAtArgmax) {
  fdbench::Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(2 + rng.below(6));
    for (auto& v : z) v = 3.0 * rng.normal();
    const auto p = fdbench::softmax(z);
    const double max = *std::max_element(p.values().begin(), p.values().end());
    EXPECT_EQ(fdbench::msp_score(p, fdbench::predict_class(p)), max);
  }
}

TEST(Doctor, Examples) {
  EXPECT_DOUBLE_EQ(fdbench::doctor_score(pv({0.0, 1.0, 0.0})), 0.0);
  EXPECT_DOUBLE_EQ(fdbench::doctor_score(pv({0.5, 0.5})), -1.0);
  EXPECT_NEAR(fdbench::doctor_score(pv({0.8, 0.2})), -0.32 / 0.68, 1e-12);
}

TEST(Doctor, BoundedByClassCount) {
  fdbench::Rng rng(13);
  for (int t = 0; t < 300; ++t) {
    const std::size_t c = 2 + rng.below(8);
    std::vector<double> z(c);
    for (auto& v : z) v = 4.0 * rng.normal();
    const double s = fdbench::doctor_score(fdbench::softmax(z));
    EXPECT_LE(s, 0.0);
    EXPECT_GE(s, -static_cast<double>(c - 1) - 1e-12);
  }
}

TEST(NegativeEntropy, Examples) {
  EXPECT_EQ(fdbench::negative_entropy_score(pv({1.0, 0.0})), 0.0);
  EXPECT_NEAR(fdbench::negative_entropy_score(pv({0.5, 0.5})), -std::numbers::ln2, 1e-15);
  for (std::size_t c = 2; c <= 10; ++c) {
    const auto u = pv(std::vector<double>(c, 1.0 / static_cast<double>(c)));
    EXPECT_NEAR(fdbench::negative_entropy_score(u), -std::log(static_cast<double>(c)), 1e-12);
  }
}

TEST(NegativeEntropy, UniformIsTheMinimum) {
  fdbench::Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(3);
    for (auto& v : z) v = 2.0 * rng.normal();
    EXPECT_GE(fdbench::negative_entropy_score(fdbench::softmax(z)), -std::log(3.0) - 1e-12);
  }
}

TEST(OneHot, AllMaximaCoincide) {
  const auto p = pv({0.0, 0.0, 1.0});
  EXPECT_EQ(fdbench::msp_score(p, 2), 1.0);
  EXPECT_EQ(fdbench::doctor_score(p), 0.0);
  EXPECT_EQ(fdbench::negative_entropy_score(p), 0.0);
}

TEST(TrustScore, Examples) {
  const auto train = embedded(1, 2, {0.0f, 1.0f, 10.0f}, {0, 0, 1});
  const auto model = fdbench::fit_trustscore(train);
  EXPECT_DOUBLE_EQ(fdbench::trustscore(model, std::vector<float>{0.5f}, 0), 19.0);
  EXPECT_DOUBLE_EQ(fdbench::trustscore(model, std::vector<float>{9.0f}, 0), 0.125);
  EXPECT_DOUBLE_EQ(fdbench::trustscore(model, std::vector<float>{5.5f}, 0), 1.0);
}

TEST(TrustScore, ZeroDistanceCases) {
  const auto model = fdbench::fit_trustscore(embedded(1, 2, {0.0f, 1.0f, 10.0f, 0.0f}, {0, 0, 1, 1}));
  // On a point shared by both classes.
  EXPECT_EQ(fdbench::trustscore(model, std::vector<float>{0.0f}, 0), 1.0);
  // Own class at distance 0, other class at distance 1.
  EXPECT_EQ(fdbench::trustscore(model, std::vector<float>{1.0f}, 0), fdbench::kTrustScoreCap);
  const auto clean = fdbench::fit_trustscore(embedded(1, 2, {0.0f, 10.0f}, {0, 1}));
  EXPECT_EQ(fdbench::trustscore(clean, std::vector<float>{0.0f}, 0), fdbench::kTrustScoreCap);
}

TEST(TrustScore, Structure) {
  const auto model = fdbench::fit_trustscore(
      embedded(2, 3, {0, 0, 0, 0, 1, 1, 2, 2, 2, 2}, {0, 0, 1, 2, 2}));
  EXPECT_EQ(model.n_classes(), 3u);
  EXPECT_EQ(model.size(), 5u);
  EXPECT_EQ(model.class_size(2), 2u);
}

TEST(TrustScore, EmptyClassIsNamed) {
  try {
    fdbench::fit_trustscore(embedded(1, 3, {0.0f, 1.0f}, {0, 2}));
    FAIL();
  } catch (const fdbench::Error& e) {
    EXPECT_EQ(e.code(), fdbench::ErrorCode::kEmptyClass);
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos);
  }
}

TEST(TrustScore, MatchesBruteForce) {
  fdbench::Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + rng.below(120);
    const std::size_t d = 1 + rng.below(6);
    const std::size_t c = 2 + rng.below(3);
    std::vector<float> pts(n * d);
    for (auto& v : pts) v = static_cast<float>(rng.normal());
    std::vector<std::int32_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<std::int32_t>(i % c);
    const fdbench::TrustModel model(d, c, pts, y);
    for (int q = 0; q < 10; ++q) {
      std::vector<float> e(d);
      for (auto& v : e) v = static_cast<float>(rng.normal());
      const int pred = static_cast<int>(rng.below(c));
      EXPECT_EQ(model.score(e, pred), oracle::trust_scan(d, pts, y, e, pred, fdbench::kTrustScoreCap));
    }
  }
}

TEST(Centroid, Examples) {
  const auto one = fdbench::fit_centroids(embedded(2, 2, {3, 4, 0, 0, 2, 0}, {0, 1, 1}));
  EXPECT_EQ(one.centroid(0)[0], 3.0);
  EXPECT_EQ(one.centroid(0)[1], 4.0);
  EXPECT_EQ(one.centroid(1)[0], 1.0);
  EXPECT_EQ(one.centroid(1)[1], 0.0);

  const auto four = fdbench::fit_centroids(embedded(1, 2, {0, 4}, {0, 1}));
  EXPECT_DOUBLE_EQ(four.length_scale, 4.0);
  EXPECT_DOUBLE_EQ(fdbench::centroid_score(four, std::vector<float>{0.0f}, 0), 1.0);
  const double at = 4.0 * std::sqrt(2.0);
  EXPECT_NEAR(fdbench::centroid_score(four, std::vector<float>{static_cast<float>(at)}, 0),
              std::exp(-1.0), 1e-6);
}

TEST(Centroid, DecreasesWithDistance) {
  const auto model = fdbench::fit_centroids(embedded(1, 2, {0, 4}, {0, 1}));
  double prev = 2.0;
  for (float x : {0.0f, 1.0f, 3.0f, 10.0f, 100.0f}) {
    const double s = fdbench::centroid_score(model, std::vector<float>{x}, 0);
    EXPECT_LT(s, prev);
    EXPECT_GE(s, 0.0);
    prev = s;
  }
  EXPECT_LT(prev, 1e-100);
}

TEST(Centroid, MedianOfPairwiseDistances) {
  // Centroids at 0, 1, 5: distances 1, 4, 5.
  const auto model = fdbench::fit_centroids(embedded(1, 3, {0, 1, 5}, {0, 1, 2}));
  EXPECT_DOUBLE_EQ(model.length_scale, 4.0);
}

TEST(ScoreRegistry, IdentifiersRoundTrip) {
  for (auto m : fdbench::kAllScoreMethods) {
    EXPECT_EQ(fdbench::parse_score_method(fdbench::to_string(m)), m);
  }
  try {
    fdbench::parse_score_method("duq");
    FAIL();
  } catch (const fdbench::Error& e) {
    EXPECT_EQ(e.code(), fdbench::ErrorCode::kUnknownScore);
  }
}

TEST(ScoreArtifact, MspIsPerSampleSoftmaxMax) {
  fdbench::Rng rng(29);
  auto a = oracle::random_artifact(rng, false);
  a.n_passes = 1;
  a.logits.resize(a.n_samples * a.n_classes);
  const auto scored = fdbench::score_artifact(a, fdbench::ScoreMethod::kMsp, {});
  for (std::size_t i = 0; i < a.n_samples; ++i) {
    const auto p = fdbench::softmax(a.sample_logits(i));
    EXPECT_EQ(scored.scores[i], *std::max_element(p.values().begin(), p.values().end()));
    EXPECT_EQ(scored.predicted[i], fdbench::predict_class(p));
  }
}

TEST(ScoreArtifact, McEntropyUsesPassMean) {
  fdbench::Rng rng(31);
  fdbench::PredictionArtifact a;
  a.n_samples = 5;
  a.n_passes = 10;
  a.n_classes = 3;
  for (std::size_t i = 0; i < 150; ++i) a.logits.push_back(static_cast<float>(rng.normal()));
  a.labels = {0, 1, 2, 0, 1};
  const auto scored = fdbench::score_artifact(a, fdbench::ScoreMethod::kMcEntropy, {});
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> mean(3, 0.0);
    for (std::size_t t = 0; t < 10; ++t) {
      const auto p = fdbench::softmax(a.pass_logits(i, t));
      for (std::size_t c = 0; c < 3; ++c) mean[c] += p[c] / 10.0;
    }
    double h = 0.0;
    for (double m : mean) h += m * std::log(m);
    EXPECT_NEAR(scored.scores[i], h, 1e-12);
  }
}

TEST(ScoreArtifact, DoctorOnOneHotRowsIsZero) {
  fdbench::PredictionArtifact a;
  a.n_samples = 3;
  a.n_classes = 3;
  a.logits = {1000, 0, 0, 0, 1000, 0, 0, 0, 1000};
  a.labels = {0, 1, 1};
  const auto scored = fdbench::score_artifact(a, fdbench::ScoreMethod::kDoctor, {});
  for (double s : scored.scores) EXPECT_EQ(s, 0.0);
}

TEST(ScoreArtifact, UnmetRequirementsAreNamed) {
  fdbench::Rng rng(37);
  auto a = oracle::random_artifact(rng, false);
  a.n_passes = 1;
  a.logits.resize(a.n_samples * a.n_classes);
  for (auto m : {fdbench::ScoreMethod::kTrustScore, fdbench::ScoreMethod::kMcMsp,
                 fdbench::ScoreMethod::kLaplace, fdbench::ScoreMethod::kConfidNet}) {
    try {
      fdbench::check_data_requirements(a, m);
      FAIL() << fdbench::to_string(m);
    } catch (const fdbench::Error& e) {
      EXPECT_EQ(e.code(), fdbench::ErrorCode::kRequirementUnmet);
    }
  }
  EXPECT_NO_THROW(fdbench::check_data_requirements(a, fdbench::ScoreMethod::kDoctor));
}

TEST(ScoreArtifact, PureAndFinite) {
  fdbench::Rng rng(41);
  auto a = oracle::random_artifact(rng);
  while (a.n_samples < a.n_classes) a = oracle::random_artifact(rng);
  for (std::size_t i = 0; i < a.n_samples; ++i) a.labels[i] = static_cast<std::int32_t>(i % a.n_classes);
  auto model = fdbench::fit_trustscore(a);
  fdbench::ScoringModels models;
  models.trust = &model;
  for (auto m : {fdbench::ScoreMethod::kMsp, fdbench::ScoreMethod::kDoctor,
                 fdbench::ScoreMethod::kNegEntropy, fdbench::ScoreMethod::kTrustScore}) {
    const auto x = fdbench::score_artifact(a, m, models);
    const auto y = fdbench::score_artifact(a, m, models);
    EXPECT_EQ(x.scores, y.scores);
    for (double s : x.scores) EXPECT_TRUE(std::isfinite(s));
  }
}
