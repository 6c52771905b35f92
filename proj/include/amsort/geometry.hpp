#pragma once

#include <array>

namespace amsort {

/// Normalized center-format box. Coordinates are fractions of the image
/// width/height; the corner extent may leave [0,1].
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  std::array<double, 4> as_array() const { return {cx, cy, w, h}; }
  static BBox from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Corners {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  friend bool operator==(const Corners&, const Corners&) = default;
};

/// Pixel-space box in MOTChallenge layout (top-left corner plus extent).
struct PixelBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct ImageDims {
  int width = 1920;
  int height = 1080;
};

/// True when every field is finite and the extent is non-negative.
bool is_valid(const BBox& b);

Corners center_to_corner(const BBox& b);
BBox corner_to_center(const Corners& c);

double area(const BBox& b);

/// Intersection over union; 0 whenever the union has zero area.
double iou(const BBox& a, const BBox& b);

/// Sum of absolute differences over (cx, cy, w, h).
double l1_box_distance(const BBox& a, const BBox& b);

/// Throws UsageError on non-positive dims.
BBox normalize(const PixelBox& p, const ImageDims& dims);
PixelBox denormalize(const BBox& b, const ImageDims& dims);

}  // namespace amsort
