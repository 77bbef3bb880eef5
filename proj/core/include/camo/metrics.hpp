#pragma once

#include <span>
#include <vector>

#include "camo/box.hpp"
#include "camo/detector.hpp"

namespace camo {

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

/// Precision/recall sweep over every distinct detection confidence, in
/// descending threshold order.
///
/// Detections are visited globally by descending confidence (ties by
/// image index, then cell index). Within its image a detection claims the
/// unmatched ground-truth box of highest IoU, provided IoU >= match_iou
/// (IoU ties go to the lower box index). Class labels are not compared;
/// callers pass a single target class. With no detections at all the
/// curve is the single point (precision 0, recall 0, threshold 1).
///
/// Throws InvalidArgument when the ground truth is empty across all images.
std::vector<PrPoint> precision_recall(std::span<const std::vector<Detection>> detections,
                                      std::span<const std::vector<Box>> ground_truth,
                                      double match_iou);

/// All-points interpolated area under the precision envelope:
/// sum over points of (r_i - r_{i-1}) * max_{j >= i} p_j with r_0 = 0.
double average_precision(std::span<const PrPoint> points);

}  // namespace camo
