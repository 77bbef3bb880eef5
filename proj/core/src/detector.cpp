#include "camo/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "camo/error.hpp"

namespace camo {

void DetectorOutput::validate() const {
  const std::size_t n = static_cast<std::size_t>(grid_h) * grid_w * anchors;
  require(boxes.size() == n && objectness.size() == n && class_probs.size() == n * classes,
          "detector output arrays do not match the grid shape");
  for (std::size_t i = 0; i < n; ++i) {
    require(objectness[i] >= 0.0 && objectness[i] <= 1.0, "objectness outside [0, 1]");
    if (classes > 0) {
      const auto row = class_row(i);
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      require(std::abs(sum - 1.0) <= 1e-5, "class scores do not sum to 1");
    }
  }
}

void Detector::check_input(const Image& image) const {
  if (image.channels() != 3 || image.width() != input_width() ||
      image.height() != input_height()) {
    throw InvalidArgument("detector expects a 3x" + std::to_string(input_height()) + "x" +
                          std::to_string(input_width()) + " image, got " +
                          std::to_string(image.channels()) + "x" +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
}

std::vector<DetectorOutput> Detector::forward_batch(std::span<const Image> images) const {
  std::vector<DetectorOutput> out;
  out.reserve(images.size());
  for (const Image& image : images) out.push_back(forward(image));
  return out;
}

std::vector<Detection> decode(const DetectorOutput& output, const DecodeOptions& options) {
  require(options.conf_threshold >= 0.0 && options.conf_threshold <= 1.0,
          "confidence threshold must lie in [0, 1]");
  require(options.nms_iou >= 0.0 && options.nms_iou <= 1.0, "NMS IoU must lie in [0, 1]");

  std::vector<Detection> candidates;
  for (std::size_t i = 0; i < output.entries(); ++i) {
    int best_class = 0;
    double best_prob = 1.0;
    if (output.classes > 0) {
      const auto row = output.class_row(i);
      const auto it = std::max_element(row.begin(), row.end());
      best_class = static_cast<int>(it - row.begin());
      best_prob = *it;
    }
    const double confidence = output.objectness[i] * best_prob;
    if (confidence < options.conf_threshold) continue;
    if (output.boxes[i].w <= 0.0 || output.boxes[i].h <= 0.0) continue;
    candidates.push_back({output.boxes[i], best_class, confidence, static_cast<int>(i)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.cell_index < b.cell_index;
  });

  std::vector<Detection> kept;
  for (const Detection& d : candidates) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (!options.class_agnostic_nms && k.class_id != d.class_id) continue;
      if (iou(k.box, d.box) >= options.nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

ScaledImage fit_to_detector(const Image& image, std::span<const Annotation> annotations,
                            const Detector& detector) {
  ScaledImage out;
  out.scale_x = static_cast<double>(detector.input_width()) / image.width();
  out.scale_y = static_cast<double>(detector.input_height()) / image.height();
  out.image = (image.width() == detector.input_width() && image.height() == detector.input_height())
                  ? image
                  : resize_bilinear(image, detector.input_width(), detector.input_height());
  for (Annotation a : annotations) {
    a.box = {a.box.cx * out.scale_x, a.box.cy * out.scale_y, a.box.w * out.scale_x,
             a.box.h * out.scale_y};
    out.annotations.push_back(std::move(a));
  }
  return out;
}

}  // namespace camo
