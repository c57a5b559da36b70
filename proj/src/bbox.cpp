#include "vageo/bbox.hpp"

#include <algorithm>
#include <cmath>

#include "vageo/error.hpp"

namespace vageo {

void validate_bbox(const BBox& box, int64_t image_height, int64_t image_width) {
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !(box.w > 0) || !(box.h > 0) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    throw ValidationError("bounding box must have finite coordinates and positive size");
  }
  const double ix = std::min(box.x1(), static_cast<double>(image_width)) - std::max(box.x0(), 0.0);
  const double iy = std::min(box.y1(), static_cast<double>(image_height)) - std::max(box.y0(), 0.0);
  if (!(ix > 0 && iy > 0)) throw ValidationError("bounding box does not overlap the image");
}

}  // namespace vageo
