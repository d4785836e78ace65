#include <vector>

#include <benchmark/benchmark.h>

#include "fdbench/confidnet.hpp"
#include "fdbench/laplace.hpp"
#include "fdbench/metrics.hpp"
#include "fdbench/probability.hpp"
#include "fdbench/rng.hpp"
#include "fdbench/trust_score.hpp"

namespace {

struct Binary {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Binary binary(std::size_t n) {
  fdbench::Rng rng(1);
  Binary b;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(0.8);
    b.labels.push_back(pos ? 1 : 0);
    b.scores.push_back(rng.normal() + (pos ? 1.0 : 0.0));
  }
  return b;
}

fdbench::PredictionArtifact embedded(std::size_t n, std::size_t d, std::size_t c) {
  fdbench::Rng rng(2);
  fdbench::PredictionArtifact a;
  a.n_samples = n;
  a.n_classes = c;
  a.embed_dim = d;
  a.split = fdbench::Split::kTrain;
  a.logits.assign(n * c, 0.0f);
  for (std::size_t i = 0; i < n; ++i) a.labels.push_back(static_cast<std::int32_t>(i % c));
  for (std::size_t i = 0; i < n * d; ++i) a.embeddings.push_back(static_cast<float>(rng.normal()));
  for (std::size_t i = 0; i < c * d; ++i) a.last_weight.push_back(static_cast<float>(rng.normal()));
  a.last_bias.assign(c, 0.0f);
  return a;
}

void BM_RocAuc(benchmark::State& state) {
  const auto b = binary(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fdbench::roc_auc(b.scores, b.labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

void BM_FprAtTpr(benchmark::State& state) {
  const auto b = binary(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fdbench::fpr_at_tpr(b.scores, b.labels));
}
BENCHMARK(BM_FprAtTpr)->RangeMultiplier(10)->Range(100, 100000);

void BM_Softmax(benchmark::State& state) {
  fdbench::Rng rng(3);
  std::vector<double> logits(static_cast<std::size_t>(state.range(0)));
  for (auto& v : logits) v = 5.0 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fdbench::softmax(std::span<const double>(logits)));
}
BENCHMARK(BM_Softmax)->Arg(10)->Arg(100)->Arg(1000);

void BM_TrustScore(benchmark::State& state) {
  const auto train = embedded(static_cast<std::size_t>(state.range(0)), 64, 10);
  const auto model = fdbench::fit_trustscore(train);
  const auto query = train.embedding(0);
  for (auto _ : state) benchmark::DoNotOptimize(fdbench::trustscore(model, query, 3));
}
BENCHMARK(BM_TrustScore)->Arg(1000)->Arg(10000);

void BM_LaplacePredictive(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto train = embedded(2000, d, 10);
  const auto post = fdbench::fit_laplace(train, fdbench::last_layer_from(train));
  const auto query = train.embedding(0);
  for (auto _ : state) benchmark::DoNotOptimize(fdbench::laplace_predictive(post, query));
}
BENCHMARK(BM_LaplacePredictive)->Arg(16)->Arg(128);

void BM_ConfidNetGradient(benchmark::State& state) {
  const fdbench::ConfidNetModel model({64, 128, 128, 1}, 0);
  fdbench::Rng rng(4);
  Eigen::MatrixXd x(128, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::VectorXd y(128);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.uniform();
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(model.loss_and_gradient(x, y, grad));
}
BENCHMARK(BM_ConfidNetGradient);

}  // namespace

BENCHMARK_MAIN();
