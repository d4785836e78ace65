#include "fdbench/confidnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fdbench/error.hpp"
#include "fdbench/metrics.hpp"
#include "fdbench/probability.hpp"
#include "fdbench/rng.hpp"
#include "tensor_io.hpp"

namespace fdbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::MatrixXd embedding_matrix(const PredictionArtifact& artifact) {
  Eigen::MatrixXd x(artifact.n_samples, artifact.embed_dim);
  for (std::size_t i = 0; i < artifact.n_samples; ++i) {
    const auto e = artifact.embedding(i);
    for (std::size_t k = 0; k < artifact.embed_dim; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = e[k];
    }
  }
  return x;
}

}  // namespace

ConfidNetModel::ConfidNetModel(std::vector<std::size_t> sizes, std::uint64_t seed)
    : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "ConfidNet layer sizes must end in a single output");
  }
  for (auto s : sizes_) {
    if (s == 0) throw Error(ErrorCode::kInvalidArgument, "ConfidNet layer size must be positive");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l]);
    const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    }
    layers_.push_back(std::move(layer));
  }
}

std::size_t ConfidNetModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return total;
}

std::vector<double> ConfidNetModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat.push_back(layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat.push_back(layer.bias(r));
  }
  return flat;
}

void ConfidNetModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kLengthMismatch, "ConfidNet parameter vector has the wrong length");
  }
  std::size_t i = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = flat[i++];
  }
}

Eigen::VectorXd ConfidNetModel::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim()) {
    throw Error(ErrorCode::kLengthMismatch, "ConfidNet input has the wrong dimension");
  }
  Eigen::MatrixXd activation = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = activation * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    activation = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return activation.col(0).unaryExpr([](double z) { return sigmoid(z); });
}

double ConfidNetModel::forward(std::span<const double> input) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t k = 0; k < input.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = input[k];
  return forward_batch(row)(0);
}

double ConfidNetModel::forward(std::span<const float> input) const {
  std::vector<double> widened(input.begin(), input.end());
  return forward(std::span<const double>(widened));
}

double ConfidNetModel::loss(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const {
  return (forward_batch(inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
}

double ConfidNetModel::loss_and_gradient(const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets,
                                         std::vector<double>& gradient) const {
  const auto batch = inputs.rows();
  if (targets.size() != batch || batch == 0) {
    throw Error(ErrorCode::kLengthMismatch, "ConfidNet batch inputs/targets mismatch");
  }
  // Forward pass keeping pre-activations (z) and activations (a).
  std::vector<Eigen::MatrixXd> a{inputs};
  std::vector<Eigen::MatrixXd> z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd pre = a.back() * layers_[l].weight.transpose();
    pre.rowwise() += layers_[l].bias.transpose();
    z.push_back(pre);
    if (l + 1 < layers_.size()) a.push_back(pre.cwiseMax(0.0));
  }
  const Eigen::VectorXd out = z.back().col(0).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::VectorXd residual = out - targets;
  const double n = static_cast<double>(batch);
  const double mse = residual.squaredNorm() / n;

  std::vector<Eigen::MatrixXd> grad_w(layers_.size());
  std::vector<Eigen::VectorXd> grad_b(layers_.size());
  Eigen::MatrixXd delta =
      ((2.0 / n) * residual.array() * out.array() * (1.0 - out.array())).matrix();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grad_w[l] = delta.transpose() * a[l];
    grad_b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * layers_[l].weight).cwiseProduct(
          (z[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

  gradient.clear();
  gradient.reserve(parameter_count());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (Eigen::Index r = 0; r < grad_w[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < grad_w[l].cols(); ++c) gradient.push_back(grad_w[l](r, c));
    }
    for (Eigen::Index r = 0; r < grad_b[l].size(); ++r) gradient.push_back(grad_b[l](r));
  }
  return mse;
}

std::vector<double> make_tcp_targets(const PredictionArtifact& artifact) {
  std::vector<double> targets(artifact.n_samples);
  std::vector<double> mean(artifact.n_classes);
  for (std::size_t i = 0; i < artifact.n_samples; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t t = 0; t < artifact.n_passes; ++t) {
      const auto row = artifact.pass_logits(i, t);
      for (std::size_t c = 0; c < artifact.n_classes; ++c) mean[c] += row[c];
    }
    for (double& v : mean) v /= static_cast<double>(artifact.n_passes);
    targets[i] = softmax(std::span<const double>(mean))[static_cast<std::size_t>(artifact.labels[i])];
  }
  return targets;
}

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

class Adam {
 public:
  explicit Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace

ConfidNetFit train_confidnet(const PredictionArtifact& train, const PredictionArtifact& val,
                             const ConfidNetConfig& config) {
  if (!train.has_embeddings() || !val.has_embeddings()) {
    throw Error(ErrorCode::kMissingEmbeddings,
                "confidnet requires embeddings in both the train and val splits");
  }
  if (train.embed_dim != val.embed_dim) {
    throw Error(ErrorCode::kShapeMismatch, "train and val embeddings differ in dimension");
  }
  if (config.batch_size == 0 || config.hidden == 0 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidnet hidden, batch_size, learning_rate must be positive");
  }

  const Eigen::MatrixXd x_train = embedding_matrix(train);
  const Eigen::VectorXd y_train = to_eigen(make_tcp_targets(train));
  const Eigen::MatrixXd x_val = embedding_matrix(val);
  const Eigen::VectorXd y_val = to_eigen(make_tcp_targets(val));
  CorrectnessVector val_errors(val.n_samples);
  for (std::size_t i = 0; i < val.n_samples; ++i) {
    const auto probs = aggregate_passes(val.sample_logits(i), val.n_passes);
    val_errors[i] = predict_class(probs) != val.labels[i] ? 1 : 0;
  }
  const auto n_errors = std::count(val_errors.begin(), val_errors.end(), 1);
  const bool use_aupr = n_errors > 0 && static_cast<std::size_t>(n_errors) < val.n_samples;

  ConfidNetModel model({train.embed_dim, config.hidden, config.hidden, 1}, config.seed);
  auto evaluate = [&](std::size_t epoch) {
    ConfidNetEpoch record;
    record.epoch = epoch;
    record.train_mse = model.loss(x_train, y_train);
    const Eigen::VectorXd out = model.forward_batch(x_val);
    record.val_mse = (out - y_val).squaredNorm() / static_cast<double>(val.n_samples);
    if (use_aupr) {
      std::vector<double> negated(out.size());
      for (Eigen::Index i = 0; i < out.size(); ++i) negated[static_cast<std::size_t>(i)] = -out(i);
      record.val_aupr = average_precision(negated, val_errors);
    }
    return record;
  };

  ConfidNetFit fit;
  fit.selected_by_aupr = use_aupr;
  fit.history.push_back(evaluate(0));
  fit.initial_train_mse = fit.history.back().train_mse;
  fit.model = model;
  fit.selected_train_mse = fit.initial_train_mse;
  auto better = [&](const ConfidNetEpoch& candidate, const ConfidNetEpoch& best) {
    return use_aupr ? candidate.val_aupr > best.val_aupr : candidate.val_mse < best.val_mse;
  };
  ConfidNetEpoch best = fit.history.back();

  const std::size_t n = train.n_samples;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> params = model.parameters();
  std::vector<double> gradient;
  Adam optimizer(params.size(), config.learning_rate);
  std::size_t step = 0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Eigen::MatrixXd xb(count, x_train.cols());
      Eigen::VectorXd yb(count);
      for (std::size_t j = 0; j < count; ++j) {
        const auto row = static_cast<Eigen::Index>(order[start + j]);
        xb.row(static_cast<Eigen::Index>(j)) = x_train.row(row);
        yb(static_cast<Eigen::Index>(j)) = y_train(row);
      }
      const double batch_loss = model.loss_and_gradient(xb, yb, gradient);
      ++step;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kDiverged, "confidnet loss became non-finite at step " +
                                              std::to_string(step) + " (epoch " +
                                              std::to_string(epoch) + ")");
      }
      optimizer.step(params, gradient);
      model.set_parameters(params);
    }

    fit.history.push_back(evaluate(epoch));
    if (better(fit.history.back(), best)) {
      best = fit.history.back();
      fit.model = model;
      fit.selected_epoch = epoch;
      fit.selected_train_mse = best.train_mse;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return fit;
}

void save_confidnet(const ConfidNetModel& model, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory.string());
  json tensors = json::array();
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    std::vector<float> w;
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        w.push_back(static_cast<float>(layer.weight(r, c)));
      }
    }
    std::vector<float> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    const std::string stem = "layer" + std::to_string(l);
    TensorDescriptor wd{stem + ".weight", DType::kFloat32,
                        {static_cast<std::size_t>(layer.weight.rows()),
                         static_cast<std::size_t>(layer.weight.cols())},
                        stem + ".weight.bin"};
    TensorDescriptor bd{stem + ".bias", DType::kFloat32,
                        {static_cast<std::size_t>(layer.bias.size())}, stem + ".bias.bin"};
    detail::write_f32(directory / wd.file, w);
    detail::write_f32(directory / bd.file, b);
    tensors.push_back(detail::to_json(wd));
    tensors.push_back(detail::to_json(bd));
  }
  detail::write_manifest_json(directory, json{{"format_version", kArtifactFormatVersion},
                                              {"kind", "confidnet_checkpoint"},
                                              {"layer_sizes", model.sizes()},
                                              {"tensors", tensors}});
}

ConfidNetModel load_confidnet(const fs::path& directory) {
  const json manifest = detail::read_manifest_json(directory);
  if (manifest.value("format_version", -1) != kArtifactFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "confidnet checkpoint format_version not understood");
  }
  if (manifest.value("kind", std::string()) != "confidnet_checkpoint") {
    throw Error(ErrorCode::kInvalidField, "manifest is not a confidnet checkpoint");
  }
  std::vector<std::size_t> sizes;
  try {
    sizes = manifest.at("layer_sizes").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestParse, std::string("layer_sizes: ") + e.what());
  }
  ConfidNetModel model(sizes, 0);
  std::map<std::string, TensorDescriptor> by_name;
  for (const auto& node : manifest.at("tensors")) {
    auto d = detail::descriptor_from_json(node);
    by_name[d.name] = std::move(d);
  }
  std::vector<double> flat;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    for (const char* part : {".weight", ".bias"}) {
      const std::string name = "layer" + std::to_string(l) + part;
      const auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw Error(ErrorCode::kMissingTensor, "checkpoint lacks tensor '" + name + "'");
      }
      const std::vector<std::size_t> expected =
          std::string(part) == ".weight" ? std::vector<std::size_t>{sizes[l + 1], sizes[l]}
                                         : std::vector<std::size_t>{sizes[l + 1]};
      if (it->second.shape != expected) {
        throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor '" + name + "' has the wrong shape");
      }
      for (float v : detail::read_f32(directory, it->second)) {
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "checkpoint tensor '" + name + "'");
        flat.push_back(v);
      }
    }
  }
  model.set_parameters(flat);
  return model;
}

}  // namespace fdbench
