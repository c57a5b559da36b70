#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vageo/bbox.hpp"
#include "vageo/tensor.hpp"

namespace vageo {

// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 3;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int64_t h, int64_t w, int64_t c, uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(static_cast<size_t>(h * w * c), fill) {}

  uint8_t& at(int64_t row, int64_t col, int64_t ch) {
    return pixels[static_cast<size_t>((row * width + col) * channels + ch)];
  }
  uint8_t at(int64_t row, int64_t col, int64_t ch) const {
    return pixels[static_cast<size_t>((row * width + col) * channels + ch)];
  }
};

using TextChunks = std::vector<std::pair<std::string, std::string>>;

Image read_png(const std::filesystem::path& path, int64_t channels = 3);
// (height, width) from the PNG header without decoding pixels.
std::pair<int64_t, int64_t> png_size(const std::filesystem::path& path);
// Writes deterministically (no timestamps); `text` becomes tEXt chunks.
void write_png(const std::filesystem::path& path, const Image& image, const TextChunks& text = {});
TextChunks read_png_text(const std::filesystem::path& path);

// RGB image -> 3 x H x W with values mapped from [0, 255] to [-1, 1].
Tensor image_to_tensor(const Image& image);

// Bilinear resampling of a C x H x W tensor (half-pixel centres).
Tensor resize_bilinear(const Tensor& chw, int64_t out_height, int64_t out_width);

// Linear grayscale rendering of a map, scaled so `max_value` maps to 255.
Image gray_image(const std::vector<double>& values, int64_t height, int64_t width, double max_value);

// Jet-style colour rendering of values in [lo, hi].
Image heatmap_image(const std::vector<double>& values, int64_t height, int64_t width, double lo, double hi);

// Alpha-blends a heatmap over an RGB image.
Image blend(const Image& base, const Image& overlay, double alpha);

void draw_box(Image& image, const BBox& box, std::array<uint8_t, 3> colour, int thickness = 2);

}  // namespace vageo
