#include "vageo/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "vageo/error.hpp"

namespace vageo {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) { throw IoError(std::string("libpng: ") + message); }
void png_warning_handler(png_structp, png_const_charp) {}

uint8_t to_byte(double v) { return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

Image read_png(const std::filesystem::path& path, int64_t channels) {
  if (channels != 1 && channels != 3) throw ConfigError("read_png supports 1 or 3 channels");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image out(img.height, img.width, channels);
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  return out;
}

std::pair<int64_t, int64_t> png_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  static const unsigned char signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != sizeof header || !std::equal(signature, signature + 8, header) ||
      std::string(reinterpret_cast<char*>(header + 12), 4) != "IHDR") {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }
  auto be32 = [&](int off) {
    return (int64_t{header[off]} << 24) | (int64_t{header[off + 1]} << 16) | (int64_t{header[off + 2]} << 8) |
           int64_t{header[off + 3]};
  };
  return {be32(20), be32(16)};
}

void write_png(const std::filesystem::path& path, const Image& image, const TextChunks& text) {
  if (image.channels != 1 && image.channels != 3) throw ConfigError("write_png supports 1 or 3 channels");
  if (image.height < 1 || image.width < 1) throw ShapeError("cannot write an empty image");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_text> chunks(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
      chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
      chunks[i].key = const_cast<char*>(text[i].first.c_str());
      chunks[i].text = const_cast<char*>(text[i].second.c_str());
      chunks[i].text_length = text[i].second.size();
    }
    if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
    png_write_info(png, info);
    const auto stride = static_cast<size_t>(image.width * image.channels);
    for (int64_t r = 0; r < image.height; ++r) {
      png_write_row(png, const_cast<png_bytep>(image.pixels.data() + static_cast<size_t>(r) * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

TextChunks read_png_text(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  TextChunks out;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_textp text = nullptr;
    int count = 0;
    png_get_text(png, info, &text, &count);
    for (int i = 0; i < count; ++i) out.emplace_back(text[i].key, std::string(text[i].text, text[i].text_length));
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

Tensor image_to_tensor(const Image& image) {
  Tensor t({3, image.height, image.width});
  const int64_t plane = image.height * image.width;
  for (int64_t i = 0; i < plane; ++i) {
    for (int64_t c = 0; c < 3; ++c) {
      const int64_t src = image.channels == 1 ? 0 : c;
      const double v = image.pixels[static_cast<size_t>(i * image.channels + src)];
      t[static_cast<size_t>(c * plane + i)] = v / 127.5 - 1.0;
    }
  }
  return t;
}

Tensor resize_bilinear(const Tensor& chw, int64_t out_height, int64_t out_width) {
  if (chw.rank() != 3) throw ShapeError("resize_bilinear expects C x H x W");
  if (out_height < 1 || out_width < 1) throw ShapeError("resize target must be positive");
  const int64_t channels = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  if (h == out_height && w == out_width) return chw;
  Tensor out({channels, out_height, out_width});
  const double sy = static_cast<double>(h) / static_cast<double>(out_height);
  const double sx = static_cast<double>(w) / static_cast<double>(out_width);
  for (int64_t oy = 0; oy < out_height; ++oy) {
    const double fy = std::clamp((static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<int64_t>(fy);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double ay = fy - static_cast<double>(y0);
    for (int64_t ox = 0; ox < out_width; ++ox) {
      const double fx = std::clamp((static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const auto x0 = static_cast<int64_t>(fx);
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double ax = fx - static_cast<double>(x0);
      for (int64_t c = 0; c < channels; ++c) {
        const double* p = chw.data() + c * h * w;
        const double top = p[y0 * w + x0] * (1 - ax) + p[y0 * w + x1] * ax;
        const double bottom = p[y1 * w + x0] * (1 - ax) + p[y1 * w + x1] * ax;
        out[static_cast<size_t>((c * out_height + oy) * out_width + ox)] = top * (1 - ay) + bottom * ay;
      }
    }
  }
  return out;
}

Image gray_image(const std::vector<double>& values, int64_t height, int64_t width, double max_value) {
  if (static_cast<int64_t>(values.size()) != height * width) throw ShapeError("gray_image: size mismatch");
  Image img(height, width, 1);
  const double scale = max_value > 0 ? 255.0 / max_value : 0.0;
  for (size_t i = 0; i < values.size(); ++i) img.pixels[i] = to_byte(values[i] * scale);
  return img;
}

Image heatmap_image(const std::vector<double>& values, int64_t height, int64_t width, double lo, double hi) {
  if (static_cast<int64_t>(values.size()) != height * width) throw ShapeError("heatmap_image: size mismatch");
  Image img(height, width, 3);
  const double span = hi > lo ? hi - lo : 1.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double t = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
    const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
    img.pixels[3 * i] = to_byte(255.0 * r);
    img.pixels[3 * i + 1] = to_byte(255.0 * g);
    img.pixels[3 * i + 2] = to_byte(255.0 * b);
  }
  return img;
}

Image blend(const Image& base, const Image& overlay, double alpha) {
  if (base.height != overlay.height || base.width != overlay.width || base.channels != 3 || overlay.channels != 3) {
    throw ShapeError("blend expects two RGB images of equal size");
  }
  Image out = base;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = to_byte((1.0 - alpha) * base.pixels[i] + alpha * overlay.pixels[i]);
  }
  return out;
}

void draw_box(Image& image, const BBox& box, std::array<uint8_t, 3> colour, int thickness) {
  const auto x0 = static_cast<int64_t>(std::floor(box.x0())), x1 = static_cast<int64_t>(std::ceil(box.x1())) - 1;
  const auto y0 = static_cast<int64_t>(std::floor(box.y0())), y1 = static_cast<int64_t>(std::ceil(box.y1())) - 1;
  auto put = [&](int64_t r, int64_t c) {
    if (r < 0 || c < 0 || r >= image.height || c >= image.width) return;
    for (int64_t ch = 0; ch < std::min<int64_t>(image.channels, 3); ++ch) image.at(r, c, ch) = colour[static_cast<size_t>(ch)];
  };
  for (int t = 0; t < thickness; ++t) {
    for (int64_t c = x0; c <= x1; ++c) {
      put(y0 + t, c);
      put(y1 - t, c);
    }
    for (int64_t r = y0; r <= y1; ++r) {
      put(r, x0 + t);
      put(r, x1 - t);
    }
  }
}

}  // namespace vageo
