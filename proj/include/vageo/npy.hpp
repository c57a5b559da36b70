#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vageo {

// NumPy .npy (format 1.0), little-endian float32, C order.
void write_npy_f32(const std::filesystem::path& path, const std::vector<double>& values, const std::vector<int64_t>& shape);

struct NpyArray {
  std::vector<int64_t> shape;
  std::vector<float> values;
};

NpyArray read_npy_f32(const std::filesystem::path& path);

}  // namespace vageo
