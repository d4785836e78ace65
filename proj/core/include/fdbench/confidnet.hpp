#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fdbench/artifact.hpp"

namespace fdbench {

struct ConfidNetConfig {
  std::size_t hidden = 128;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 100;
  std::size_t patience = 15;  // stale validation checks before stopping
  std::uint64_t seed = 0;
};

// Fully connected regressor: ReLU hidden layers, sigmoid output in (0, 1).
class ConfidNetModel {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
  };

  ConfidNetModel() = default;
  // He-uniform weights, zero biases. sizes = {D, H, ..., 1}.
  ConfidNetModel(std::vector<std::size_t> sizes, std::uint64_t seed);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t parameter_count() const;

  // Flattened as weight (row-major) then bias, layer by layer.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  double forward(std::span<const double> input) const;
  double forward(std::span<const float> input) const;
  // inputs: one sample per row.
  Eigen::VectorXd forward_batch(const Eigen::MatrixXd& inputs) const;

  // Mean squared error over the batch; fills gradient in parameters() order.
  double loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                           std::vector<double>& gradient) const;
  double loss(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
};

// Softmax of the pass-averaged logits, read at the true label.
std::vector<double> make_tcp_targets(const PredictionArtifact& artifact);

struct ConfidNetEpoch {
  std::size_t epoch = 0;  // 0 = before any update
  double train_mse = 0.0;
  double val_aupr = 0.0;  // AUPR for misclassification, score = -output
  double val_mse = 0.0;
};

struct ConfidNetFit {
  ConfidNetModel model;  // the selected checkpoint
  std::size_t selected_epoch = 0;
  double initial_train_mse = 0.0;
  double selected_train_mse = 0.0;
  bool selected_by_aupr = true;  // false when the val split has no errors (or no correct)
  std::vector<ConfidNetEpoch> history;
};

// Adam on the MSE to TCP targets. The checkpoint with the highest validation
// AUPR for error detection is kept; epoch 0 is a candidate.
ConfidNetFit train_confidnet(const PredictionArtifact& train, const PredictionArtifact& val,
                             const ConfidNetConfig& config);

inline double confidnet_score(const ConfidNetModel& model, std::span<const float> embedding) {
  return model.forward(embedding);
}

// Manifest + raw float32 tensors, same layout rules as prediction artifacts.
void save_confidnet(const ConfidNetModel& model, const std::filesystem::path& directory);
ConfidNetModel load_confidnet(const std::filesystem::path& directory);

}  // namespace fdbench
