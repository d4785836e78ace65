#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace fdbench {

// Desk-scale stand-in for a trained classifier. Embeddings are unit-variance
// Gaussian clusters around separation * e_c; the readout is the matching
// linear discriminant, perturbed per seed.
struct SyntheticConfig {
  std::size_t n_classes = 3;
  std::size_t embed_dim = 8;
  std::size_t n_train = 2000;
  std::size_t n_val = 2000;
  std::size_t n_test = 2000;
  double separation = 2.1;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 5;
  std::size_t mc_passes = 10;
  double dropout = 0.1;
  std::size_t ensemble_members = 5;
  double weight_noise = 0.2;  // std of per-model readout perturbation
  double logit_noise = 0.1;   // std of additive logit noise
};

// Writes seed_<k>/{train,val,test,mc_val,mc_test}, ensemble/member_<j>/{val,test}
// and a run_config.json exercising every score. Returns the config path.
std::filesystem::path generate_synthetic(const SyntheticConfig& config,
                                         const std::filesystem::path& out);

}  // namespace fdbench
