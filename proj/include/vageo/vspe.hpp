#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vageo/tensor.hpp"

// View-specific positional encoding: a per-pixel weight map centred on the
// clicked object, appended to the query image as an extra channel.
namespace vageo {

struct ClickPoint {
  int64_t row = 0;
  int64_t col = 0;

  bool operator==(const ClickPoint&) const = default;
};

enum class QueryView { ground, drone };

std::string to_string(QueryView view);
QueryView query_view_from_string(const std::string& name);

enum class GroundKernel {
  paper_squared,     // exp(-d^2 / sigma) / (2 sigma)
  laplace_absolute,  // exp(-d / sigma) / (2 sigma)
};

std::string to_string(GroundKernel kernel);
GroundKernel ground_kernel_from_string(const std::string& name);

struct GroundEncodingConfig {
  double sigma = 25.0;
  GroundKernel kernel = GroundKernel::paper_squared;
  bool normalize_peak = true;

  void validate() const;
};

struct DroneEncodingConfig {
  // Ring weights ordered from the innermost ring outwards.
  std::array<double, 4> weights{0.60, 0.15, 0.15, 0.10};

  void validate() const;
};

// Ring weight vectors of the drone-view weight ablation, in table order.
extern const std::array<std::array<double, 4>, 8> kDroneWeightAblation;

struct EncodingMap {
  int64_t height = 0;
  int64_t width = 0;
  QueryView source_view = QueryView::ground;
  std::vector<double> values;  // row-major, height * width

  double at(int64_t row, int64_t col) const { return values[static_cast<size_t>(row * width + col)]; }
  double max_value() const;
};

void check_click(int64_t height, int64_t width, const ClickPoint& click);

EncodingMap ground_encoding(int64_t height, int64_t width, const ClickPoint& click, const GroundEncodingConfig& config);

// Index (1..4) of the square ring holding a pixel at Chebyshev distance
// `chebyshev` when the farthest image corner sits at `max_radius`.
int drone_ring(int64_t chebyshev, int64_t max_radius);

// Chebyshev distance from the click to the farthest image corner.
int64_t drone_max_radius(int64_t height, int64_t width, const ClickPoint& click);

EncodingMap drone_encoding(int64_t height, int64_t width, const ClickPoint& click, const DroneEncodingConfig& config);

// query_image: C x H x W. Returns (C+1) x H x W with the map as the last channel.
Tensor attach_encoding(const Tensor& query_image, const EncodingMap& map);

}  // namespace vageo
