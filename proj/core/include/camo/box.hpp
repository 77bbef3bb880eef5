#pragma once

#include <string>

namespace camo {

/// Axis-aligned box in pixel coordinates, stored as centre and extent.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const noexcept { return cx - 0.5 * w; }
  double right() const noexcept { return cx + 0.5 * w; }
  double top() const noexcept { return cy - 0.5 * h; }
  double bottom() const noexcept { return cy + 0.5 * h; }
  double area() const noexcept { return w * h; }

  static Box from_corners(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

double intersection_area(const Box& a, const Box& b) noexcept;
double iou(const Box& a, const Box& b) noexcept;

/// Ground-truth object: a class-labelled box belonging to one image.
struct Annotation {
  std::string image_id;
  int class_id = 0;
  Box box;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Throws InvalidArgument unless the box has positive extent and overlaps
/// the image [0, width) x [0, height).
void validate_annotation(const Annotation& annotation, int image_width, int image_height);

}  // namespace camo
