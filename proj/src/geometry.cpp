#include "amsort/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amsort/error.hpp"

namespace amsort {

bool is_valid(const BBox& b) {
  return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) &&
         std::isfinite(b.h) && b.w >= 0.0 && b.h >= 0.0;
}

Corners center_to_corner(const BBox& b) {
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w, b.cy + 0.5 * b.h};
}

BBox corner_to_center(const Corners& c) {
  return {0.5 * (c.x1 + c.x2), 0.5 * (c.y1 + c.y2), c.x2 - c.x1, c.y2 - c.y1};
}

double area(const BBox& b) { return b.w * b.h; }

double iou(const BBox& a, const BBox& b) {
  const Corners ca = center_to_corner(a);
  const Corners cb = center_to_corner(b);
  const double iw = std::max(0.0, std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1));
  const double ih = std::max(0.0, std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1));
  const double inter = iw * ih;
  // Areas from the same corners as the overlap, so iou(a, a) is exactly 1.
  const double uni = (ca.x2 - ca.x1) * (ca.y2 - ca.y1) + (cb.x2 - cb.x1) * (cb.y2 - cb.y1) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double l1_box_distance(const BBox& a, const BBox& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

namespace {
void check_dims(const ImageDims& dims) {
  if (dims.width <= 0 || dims.height <= 0) {
    throw UsageError("image dims must be positive, got " + std::to_string(dims.width) + "x" +
                     std::to_string(dims.height));
  }
}
}  // namespace

BBox normalize(const PixelBox& p, const ImageDims& dims) {
  check_dims(dims);
  const double W = dims.width;
  const double H = dims.height;
  return {(p.left + 0.5 * p.width) / W, (p.top + 0.5 * p.height) / H, p.width / W,
          p.height / H};
}

PixelBox denormalize(const BBox& b, const ImageDims& dims) {
  check_dims(dims);
  const double W = dims.width;
  const double H = dims.height;
  const double width = b.w * W;
  const double height = b.h * H;
  return {b.cx * W - 0.5 * width, b.cy * H - 0.5 * height, width, height};
}

}  // namespace amsort
