#include "vageo/vspe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vageo/error.hpp"

namespace vageo {

const std::array<std::array<double, 4>, 8> kDroneWeightAblation{{
    {0.60, 0.15, 0.15, 0.10},
    {0.60, 0.20, 0.15, 0.05},
    {0.40, 0.30, 0.20, 0.10},
    {0.50, 0.30, 0.10, 0.10},
    {0.70, 0.15, 0.10, 0.05},
    {0.80, 0.10, 0.05, 0.05},
    {0.60, 0.25, 0.10, 0.05},
    {0.90, 0.05, 0.05, 0.00},
}};

std::string to_string(QueryView view) { return view == QueryView::ground ? "ground" : "drone"; }

QueryView query_view_from_string(const std::string& name) {
  if (name == "ground") return QueryView::ground;
  if (name == "drone") return QueryView::drone;
  throw ConfigError("unknown view '" + name + "' (expected ground or drone)");
}

std::string to_string(GroundKernel kernel) {
  return kernel == GroundKernel::paper_squared ? "paper-squared" : "laplace-absolute";
}

GroundKernel ground_kernel_from_string(const std::string& name) {
  if (name == "paper-squared") return GroundKernel::paper_squared;
  if (name == "laplace-absolute") return GroundKernel::laplace_absolute;
  throw ConfigError("unknown ground kernel '" + name + "' (expected paper-squared or laplace-absolute)");
}

void GroundEncodingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("ground encoding sigma must be positive");
}

void DroneEncodingConfig::validate() const {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("drone ring weights must be non-negative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("drone ring weights must sum to 1");
  if (*std::max_element(weights.begin(), weights.end()) != weights[0]) {
    throw ConfigError("innermost drone ring weight must be the largest");
  }
}

double EncodingMap::max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

void check_click(int64_t height, int64_t width, const ClickPoint& click) {
  if (height < 1 || width < 1) throw PreconditionError("encoding map must have positive dimensions");
  if (click.row < 0 || click.row >= height || click.col < 0 || click.col >= width) {
    throw PreconditionError("click (" + std::to_string(click.row) + ", " + std::to_string(click.col) +
                            ") lies outside a " + std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

EncodingMap ground_encoding(int64_t height, int64_t width, const ClickPoint& click, const GroundEncodingConfig& config) {
  check_click(height, width, click);
  config.validate();
  EncodingMap map{height, width, QueryView::ground, std::vector<double>(static_cast<size_t>(height * width))};
  const double scale = 1.0 / (2.0 * config.sigma);
  for (int64_t i = 0; i < height; ++i) {
    const double dy = static_cast<double>(i - click.row);
    for (int64_t j = 0; j < width; ++j) {
      const double dx = static_cast<double>(j - click.col);
      const double d2 = dy * dy + dx * dx;
      const double exponent = config.kernel == GroundKernel::paper_squared ? d2 : std::sqrt(d2);
      map.values[static_cast<size_t>(i * width + j)] = scale * std::exp(-exponent / config.sigma);
    }
  }
  if (config.normalize_peak) {
    // The click pixel holds exactly `scale`; dividing by it pins the peak at 1.
    for (auto& v : map.values) v /= scale;
  }
  return map;
}

int drone_ring(int64_t chebyshev, int64_t max_radius) {
  if (max_radius <= 0) return 1;
  const int64_t ring = (4 * chebyshev + max_radius - 1) / max_radius;
  return static_cast<int>(std::clamp<int64_t>(ring, 1, 4));
}

int64_t drone_max_radius(int64_t height, int64_t width, const ClickPoint& click) {
  return std::max({click.row, height - 1 - click.row, click.col, width - 1 - click.col});
}

EncodingMap drone_encoding(int64_t height, int64_t width, const ClickPoint& click, const DroneEncodingConfig& config) {
  check_click(height, width, click);
  config.validate();
  EncodingMap map{height, width, QueryView::drone, std::vector<double>(static_cast<size_t>(height * width))};
  const int64_t radius = drone_max_radius(height, width, click);
  for (int64_t i = 0; i < height; ++i) {
    for (int64_t j = 0; j < width; ++j) {
      const int64_t cheb = std::max(std::abs(i - click.row), std::abs(j - click.col));
      map.values[static_cast<size_t>(i * width + j)] = config.weights[static_cast<size_t>(drone_ring(cheb, radius) - 1)];
    }
  }
  return map;
}

Tensor attach_encoding(const Tensor& query_image, const EncodingMap& map) {
  if (query_image.rank() != 3) throw ShapeError("attach_encoding expects a C x H x W image");
  if (query_image.dim(1) != map.height || query_image.dim(2) != map.width) {
    throw ShapeError("encoding map " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                     " does not match image " + shape_string(query_image.shape()));
  }
  const int64_t channels = query_image.dim(0), plane = map.height * map.width;
  Tensor out({channels + 1, map.height, map.width});
  std::copy(query_image.storage().begin(), query_image.storage().end(), out.storage().begin());
  std::copy(map.values.begin(), map.values.end(), out.storage().begin() + channels * plane);
  return out;
}

}  // namespace vageo
