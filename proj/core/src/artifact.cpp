#include "fdbench/artifact.hpp"

#include <cmath>
#include <cstring>

#include "fdbench/error.hpp"
#include "tensor_io.hpp"

namespace fdbench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidSplit,
              "split must be one of train/val/test, got '" + std::string(text) + "'");
}

std::string_view to_string(DType dtype) noexcept {
  return dtype == DType::kInt32 ? "int32" : "float32";
}

std::size_t TensorDescriptor::element_count() const {
  std::size_t count = 1;
  for (auto extent : shape) count *= extent;
  return count;
}

const TensorDescriptor* Manifest::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::span<const float> PredictionArtifact::sample_logits(std::size_t sample) const {
  const std::size_t block = n_passes * n_classes;
  return std::span<const float>(logits).subspan(sample * block, block);
}

std::span<const float> PredictionArtifact::pass_logits(std::size_t sample,
                                                       std::size_t pass) const {
  return std::span<const float>(logits).subspan((sample * n_passes + pass) * n_classes,
                                                n_classes);
}

std::span<const float> PredictionArtifact::embedding(std::size_t sample) const {
  return std::span<const float>(embeddings).subspan(sample * embed_dim, embed_dim);
}

namespace {

void require_length(std::string_view field, std::size_t actual, std::size_t expected) {
  if (actual != expected) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor '" + std::string(field) + "' has " + std::to_string(actual) +
                    " elements, shape requires " + std::to_string(expected));
  }
}

void require_finite(std::string_view field, std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFinite, "tensor '" + std::string(field) +
                                             "' has a non-finite value at flat index " +
                                             std::to_string(i));
    }
  }
}

std::size_t positive_field(const json& manifest, const char* key, bool allow_zero = false) {
  const auto it = manifest.find(key);
  if (it == manifest.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::kInvalidField,
                std::string("manifest field '") + key + "' missing or not an integer");
  }
  const auto value = it->get<std::int64_t>();
  if (value < 0 || (!allow_zero && value == 0)) {
    throw Error(ErrorCode::kInvalidField,
                std::string("manifest field '") + key + "' out of range: " + std::to_string(value));
  }
  return static_cast<std::size_t>(value);
}

void require_shape(const TensorDescriptor& d, const std::vector<std::size_t>& expected) {
  if (d.shape != expected) {
    std::string want = "[";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      want += (i ? "," : "") + std::to_string(expected[i]);
    }
    throw Error(ErrorCode::kShapeMismatch,
                "tensor '" + d.name + "' declared shape disagrees with manifest dims " + want + "]");
  }
}

}  // namespace

void validate(const PredictionArtifact& a) {
  if (a.n_samples == 0) throw Error(ErrorCode::kInvalidField, "n_samples must be positive");
  if (a.n_passes == 0) throw Error(ErrorCode::kInvalidField, "n_passes must be positive");
  if (a.n_classes < 2) throw Error(ErrorCode::kInvalidField, "n_classes must be at least 2");
  require_length("logits", a.logits.size(), a.n_samples * a.n_passes * a.n_classes);
  require_length("labels", a.labels.size(), a.n_samples);
  require_length("embeddings", a.embeddings.size(), a.n_samples * a.embed_dim);
  if (a.has_last_layer()) {
    require_length("last_weight", a.last_weight.size(), a.n_classes * a.embed_dim);
    if (a.embed_dim == 0) {
      throw Error(ErrorCode::kInvalidField, "last_weight requires embeddings (embed_dim > 0)");
    }
  }
  if (!a.last_bias.empty()) {
    if (!a.has_last_layer()) {
      throw Error(ErrorCode::kInvalidField, "last_bias present without last_weight");
    }
    require_length("last_bias", a.last_bias.size(), a.n_classes);
  }
  require_finite("logits", a.logits);
  require_finite("embeddings", a.embeddings);
  require_finite("last_weight", a.last_weight);
  require_finite("last_bias", a.last_bias);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const auto label = a.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= a.n_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(label) + " at sample " + std::to_string(i) +
                      " outside [0, " + std::to_string(a.n_classes) + ")");
    }
  }
}

Manifest write_artifact(const PredictionArtifact& artifact, const fs::path& directory) {
  validate(artifact);
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory.string() + ": " + ec.message());

  Manifest m;
  m.n_samples = artifact.n_samples;
  m.n_passes = artifact.n_passes;
  m.n_classes = artifact.n_classes;
  m.embed_dim = artifact.embed_dim;
  m.split = artifact.split;
  m.meta = artifact.meta;

  const auto n = artifact.n_samples;
  const auto c = artifact.n_classes;
  const auto d = artifact.embed_dim;
  m.tensors.push_back({"logits", DType::kFloat32, {n, artifact.n_passes, c}, "logits.bin"});
  detail::write_f32(directory / "logits.bin", artifact.logits);
  m.tensors.push_back({"labels", DType::kInt32, {n}, "labels.bin"});
  detail::write_i32(directory / "labels.bin", artifact.labels);
  if (artifact.has_embeddings()) {
    m.tensors.push_back({"embeddings", DType::kFloat32, {n, d}, "embeddings.bin"});
    detail::write_f32(directory / "embeddings.bin", artifact.embeddings);
  }
  if (artifact.has_last_layer()) {
    m.tensors.push_back({"last_weight", DType::kFloat32, {c, d}, "last_weight.bin"});
    detail::write_f32(directory / "last_weight.bin", artifact.last_weight);
  }
  if (!artifact.last_bias.empty()) {
    m.tensors.push_back({"last_bias", DType::kFloat32, {c}, "last_bias.bin"});
    detail::write_f32(directory / "last_bias.bin", artifact.last_bias);
  }

  json tensors = json::array();
  for (const auto& t : m.tensors) tensors.push_back(detail::to_json(t));
  const json manifest{{"format_version", m.format_version},
                      {"kind", "prediction_artifact"},
                      {"n_samples", m.n_samples},
                      {"n_passes", m.n_passes},
                      {"n_classes", m.n_classes},
                      {"embed_dim", m.embed_dim},
                      {"split", std::string(to_string(m.split))},
                      {"meta", m.meta},
                      {"tensors", tensors}};
  // Manifest last: a directory with a manifest has all of its tensors.
  detail::write_manifest_json(directory, manifest);
  return m;
}

PredictionArtifact read_artifact(const fs::path& directory) {
  const json manifest = detail::read_manifest_json(directory);
  if (!manifest.is_object()) {
    throw Error(ErrorCode::kManifestParse, "manifest.json must hold a JSON object");
  }
  const auto version = manifest.find("format_version");
  if (version == manifest.end() || !version->is_number_integer()) {
    throw Error(ErrorCode::kInvalidField, "manifest field 'format_version' missing");
  }
  if (version->get<int>() != kArtifactFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "format_version " + std::to_string(version->get<int>()) + " not understood");
  }

  PredictionArtifact a;
  a.n_samples = positive_field(manifest, "n_samples");
  a.n_passes = positive_field(manifest, "n_passes");
  a.n_classes = positive_field(manifest, "n_classes");
  a.embed_dim = positive_field(manifest, "embed_dim", /*allow_zero=*/true);
  if (a.n_classes < 2) throw Error(ErrorCode::kInvalidField, "n_classes must be at least 2");
  const auto split = manifest.find("split");
  if (split == manifest.end() || !split->is_string()) {
    throw Error(ErrorCode::kInvalidSplit, "manifest field 'split' missing");
  }
  a.split = parse_split(split->get<std::string>());
  if (const auto meta = manifest.find("meta"); meta != manifest.end()) {
    try {
      a.meta = meta->get<std::map<std::string, std::string>>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kInvalidField, "manifest 'meta' must map strings to strings");
    }
  }

  const auto tensors = manifest.find("tensors");
  if (tensors == manifest.end() || !tensors->is_array()) {
    throw Error(ErrorCode::kInvalidField, "manifest field 'tensors' missing");
  }
  std::map<std::string, TensorDescriptor> by_name;
  for (const auto& node : *tensors) {
    auto d = detail::descriptor_from_json(node);
    by_name[d.name] = std::move(d);
  }
  auto require = [&](const std::string& name) -> const TensorDescriptor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::kMissingTensor, "manifest does not declare tensor '" + name + "'");
    }
    return it->second;
  };

  const auto n = a.n_samples;
  const auto c = a.n_classes;
  const auto d = a.embed_dim;

  const auto& logits = require("logits");
  require_shape(logits, {n, a.n_passes, c});
  a.logits = detail::read_f32(directory, logits);

  const auto& labels = require("labels");
  require_shape(labels, {n});
  a.labels = detail::read_i32(directory, labels);

  if (d > 0) {
    const auto& emb = require("embeddings");
    require_shape(emb, {n, d});
    a.embeddings = detail::read_f32(directory, emb);
  } else if (by_name.contains("embeddings")) {
    throw Error(ErrorCode::kShapeMismatch, "tensor 'embeddings' declared but embed_dim is 0");
  }
  if (const auto it = by_name.find("last_weight"); it != by_name.end()) {
    require_shape(it->second, {c, d});
    a.last_weight = detail::read_f32(directory, it->second);
  }
  if (const auto it = by_name.find("last_bias"); it != by_name.end()) {
    require_shape(it->second, {c});
    a.last_bias = detail::read_f32(directory, it->second);
  }

  validate(a);
  return a;
}

namespace {

template <typename T>
bool same_bytes(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

}  // namespace

bool bitwise_equal(const PredictionArtifact& a, const PredictionArtifact& b) {
  return a.n_samples == b.n_samples && a.n_passes == b.n_passes && a.n_classes == b.n_classes &&
         a.embed_dim == b.embed_dim && a.split == b.split && a.meta == b.meta &&
         same_bytes(a.logits, b.logits) && same_bytes(a.labels, b.labels) &&
         same_bytes(a.embeddings, b.embeddings) && same_bytes(a.last_weight, b.last_weight) &&
         same_bytes(a.last_bias, b.last_bias);
}

}  // namespace fdbench
