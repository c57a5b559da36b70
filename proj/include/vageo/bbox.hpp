#pragma once

#include <cstdint>

namespace vageo {

// Axis-aligned box in reference-image pixels, centre format. Corner views use
// the half-open convention [x0, x1) x [y0, y1).
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x0() const { return cx - 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double x1() const { return cx + 0.5 * w; }
  double y1() const { return cy + 0.5 * h; }
  double area() const { return w > 0 && h > 0 ? w * h : 0.0; }

  static BBox from_corners(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }

  bool operator==(const BBox&) const = default;
};

// Throws ValidationError unless w, h > 0 and the box overlaps the image.
void validate_bbox(const BBox& box, int64_t image_height, int64_t image_width);

}  // namespace vageo
