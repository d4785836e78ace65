#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fdbench {

inline constexpr int kArtifactFormatVersion = 1;

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split) noexcept;
// Throws Error(kInvalidSplit) for anything but "train", "val", "test".
Split parse_split(std::string_view text);

enum class DType { kFloat32, kInt32 };

std::string_view to_string(DType dtype) noexcept;

struct TensorDescriptor {
  std::string name;
  DType dtype = DType::kFloat32;
  std::vector<std::size_t> shape;
  std::string file;  // relative to the artifact directory

  std::size_t element_count() const;
  std::size_t byte_size() const { return element_count() * 4; }
};

struct Manifest {
  int format_version = kArtifactFormatVersion;
  std::size_t n_samples = 0;
  std::size_t n_passes = 0;
  std::size_t n_classes = 0;
  std::size_t embed_dim = 0;
  Split split = Split::kTest;
  std::map<std::string, std::string> meta;
  std::vector<TensorDescriptor> tensors;

  const TensorDescriptor* find(std::string_view name) const;
};

// One exported evaluation split of a classifier.
//
// logits are [n_samples x n_passes x n_classes] row-major. Deterministic
// models use n_passes = 1; MC-dropout passes and ensemble members both live
// on the pass axis. embeddings are [n_samples x embed_dim] and empty when
// embed_dim = 0. last_weight [n_classes x embed_dim] and last_bias
// [n_classes] are the optional final affine layer.
struct PredictionArtifact {
  std::size_t n_samples = 0;
  std::size_t n_passes = 1;
  std::size_t n_classes = 2;
  std::size_t embed_dim = 0;
  std::vector<float> logits;
  std::vector<std::int32_t> labels;
  std::vector<float> embeddings;
  std::vector<float> last_weight;
  std::vector<float> last_bias;
  Split split = Split::kTest;
  std::map<std::string, std::string> meta;

  bool has_embeddings() const { return embed_dim > 0; }
  bool has_last_layer() const { return !last_weight.empty(); }

  // All passes of one sample, [n_passes x n_classes].
  std::span<const float> sample_logits(std::size_t sample) const;
  std::span<const float> pass_logits(std::size_t sample, std::size_t pass) const;
  std::span<const float> embedding(std::size_t sample) const;
};

// Checks every invariant and throws the first violation as a named Error.
void validate(const PredictionArtifact& artifact);

// Writes manifest.json plus one raw little-endian .bin file per tensor.
Manifest write_artifact(const PredictionArtifact& artifact,
                        const std::filesystem::path& directory);

// Reads and fully validates; never returns a partially loaded artifact.
PredictionArtifact read_artifact(const std::filesystem::path& directory);

// Bitwise comparison of tensors plus equality of all scalar fields.
bool bitwise_equal(const PredictionArtifact& a, const PredictionArtifact& b);

}  // namespace fdbench
