#pragma once

// Raw tensor files shared by prediction artifacts and model checkpoints:
// little-endian, row-major, no header, no padding.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdbench/artifact.hpp"

namespace fdbench::detail {

void write_f32(const std::filesystem::path& file, std::span<const float> values);
void write_i32(const std::filesystem::path& file, std::span<const std::int32_t> values);

// Both readers check the exact byte length against descriptor.shape and
// report a shape mismatch naming descriptor.name.
std::vector<float> read_f32(const std::filesystem::path& dir, const TensorDescriptor& descriptor);
std::vector<std::int32_t> read_i32(const std::filesystem::path& dir,
                                   const TensorDescriptor& descriptor);

nlohmann::json to_json(const TensorDescriptor& descriptor);
TensorDescriptor descriptor_from_json(const nlohmann::json& node);

nlohmann::json read_manifest_json(const std::filesystem::path& dir);
void write_manifest_json(const std::filesystem::path& dir, const nlohmann::json& manifest);

}  // namespace fdbench::detail
