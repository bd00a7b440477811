#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace provenance {

/// Dense float32 tensor, row-major.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::uint64_t elements() const;
};

using TensorMap = std::map<std::string, Tensor, std::less<>>;

/// Weight file layout (all integers little-endian):
///
///     "PVTW" u32 version=1 u32 count
///     count x { u32 name_len, name bytes, u32 ndim, u64 dims[ndim], f32 data[prod(dims)] }
TensorMap read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors);

}  // namespace provenance
