#include "tensor_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>

#include "fdbench/error.hpp"

namespace fdbench::detail {

namespace fs = std::filesystem;

namespace {

void put_le32(std::uint32_t word, char* out) {
  out[0] = static_cast<char>(word & 0xffu);
  out[1] = static_cast<char>((word >> 8) & 0xffu);
  out[2] = static_cast<char>((word >> 16) & 0xffu);
  out[3] = static_cast<char>((word >> 24) & 0xffu);
}

std::uint32_t get_le32(const unsigned char* in) {
  return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
         (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

template <typename Word>
void write_words(const fs::path& file, std::span<const Word> values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    put_le32(std::bit_cast<std::uint32_t>(values[i]), bytes.data() + 4 * i);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + file.string());
}

template <typename Word>
std::vector<Word> read_words(const fs::path& dir, const TensorDescriptor& descriptor) {
  const fs::path file = dir / descriptor.file;
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) {
    throw Error(ErrorCode::kMissingFile,
                "tensor file for '" + descriptor.name + "' not found: " + file.string());
  }
  const auto actual = fs::file_size(file, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat " + file.string());
  if (actual != descriptor.byte_size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor '" + descriptor.name + "' has " + std::to_string(actual) +
                    " bytes, shape requires " + std::to_string(descriptor.byte_size()));
  }
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::vector<unsigned char> bytes(descriptor.byte_size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(ErrorCode::kIo, "read failed: " + file.string());

  std::vector<Word> values(descriptor.element_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<Word>(get_le32(bytes.data() + 4 * i));
  }
  return values;
}

}  // namespace

void write_f32(const fs::path& file, std::span<const float> values) {
  write_words<float>(file, values);
}

void write_i32(const fs::path& file, std::span<const std::int32_t> values) {
  write_words<std::int32_t>(file, values);
}

std::vector<float> read_f32(const fs::path& dir, const TensorDescriptor& descriptor) {
  if (descriptor.dtype != DType::kFloat32) {
    throw Error(ErrorCode::kInvalidField, "tensor '" + descriptor.name + "' must be float32");
  }
  return read_words<float>(dir, descriptor);
}

std::vector<std::int32_t> read_i32(const fs::path& dir, const TensorDescriptor& descriptor) {
  if (descriptor.dtype != DType::kInt32) {
    throw Error(ErrorCode::kInvalidField, "tensor '" + descriptor.name + "' must be int32");
  }
  return read_words<std::int32_t>(dir, descriptor);
}

nlohmann::json to_json(const TensorDescriptor& descriptor) {
  return nlohmann::json{{"name", descriptor.name},
                        {"dtype", std::string(to_string(descriptor.dtype))},
                        {"shape", descriptor.shape},
                        {"file", descriptor.file}};
}

TensorDescriptor descriptor_from_json(const nlohmann::json& node) {
  TensorDescriptor d;
  try {
    d.name = node.at("name").get<std::string>();
    const auto dtype = node.at("dtype").get<std::string>();
    if (dtype == "float32") {
      d.dtype = DType::kFloat32;
    } else if (dtype == "int32") {
      d.dtype = DType::kInt32;
    } else {
      throw Error(ErrorCode::kInvalidField,
                  "tensor '" + d.name + "' has unsupported dtype '" + dtype + "'");
    }
    d.shape = node.at("shape").get<std::vector<std::size_t>>();
    d.file = node.at("file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestParse, std::string("bad tensor descriptor: ") + e.what());
  }
  if (fs::path(d.file).is_absolute() || d.file.find("..") != std::string::npos) {
    throw Error(ErrorCode::kInvalidField,
                "tensor '" + d.name + "' file must be a plain relative path");
  }
  return d;
}

nlohmann::json read_manifest_json(const fs::path& dir) {
  const fs::path file = dir / "manifest.json";
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) {
    throw Error(ErrorCode::kMissingFile, "manifest.json not found in " + dir.string());
  }
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kManifestParse, file.string() + ": " + e.what());
  }
}

void write_manifest_json(const fs::path& dir, const nlohmann::json& manifest) {
  const fs::path file = dir / "manifest.json";
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + file.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + file.string());
}

}  // namespace fdbench::detail
