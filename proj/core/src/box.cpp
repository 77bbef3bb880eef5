#include "camo/box.hpp"

#include <algorithm>

#include "camo/error.hpp"

namespace camo {

double intersection_area(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void validate_annotation(const Annotation& annotation, int image_width, int image_height) {
  const Box& b = annotation.box;
  require(b.w > 0.0 && b.h > 0.0, "annotation box must have positive width and height");
  require(b.right() > 0.0 && b.left() < image_width && b.bottom() > 0.0 &&
              b.top() < image_height,
          "annotation box does not intersect the image");
}

}  // namespace camo
