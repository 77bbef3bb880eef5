#include "camo/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "camo/error.hpp"

namespace camo {

std::vector<PrPoint> precision_recall(std::span<const std::vector<Detection>> detections,
                                      std::span<const std::vector<Box>> ground_truth,
                                      double match_iou) {
  require(detections.size() == ground_truth.size(),
          "detections and ground truth cover different image counts");
  require(match_iou >= 0.0 && match_iou <= 1.0, "match IoU must lie in [0, 1]");
  std::size_t total_gt = 0;
  for (const auto& g : ground_truth) total_gt += g.size();
  require(total_gt > 0, "ground truth is empty; recall is undefined");

  struct Ref {
    double confidence;
    std::size_t image;
    int cell;
    std::size_t index;
  };
  std::vector<Ref> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (std::size_t k = 0; k < detections[i].size(); ++k) {
      const Detection& d = detections[i][k];
      order.push_back({d.confidence, i, d.cell_index, k});
    }
  }
  if (order.empty()) return {{0.0, 0.0, 1.0}};
  std::sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.image != b.image) return a.image < b.image;
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.index < b.index;
  });

  std::vector<std::vector<bool>> matched(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    matched[i].assign(ground_truth[i].size(), false);
  }

  std::vector<PrPoint> points;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Ref& r = order[pos];
    const Box& box = detections[r.image][r.index].box;
    const auto& gts = ground_truth[r.image];
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[r.image][g]) continue;
      const double o = iou(box, gts[g]);
      if (o >= match_iou && o > best) {
        best = o;
        best_g = g;
      }
    }
    if (best >= 0.0) {
      matched[r.image][best_g] = true;
      ++tp;
    }
    ++seen;
    const bool last_of_threshold =
        pos + 1 == order.size() || order[pos + 1].confidence != r.confidence;
    if (last_of_threshold) {
      points.push_back({static_cast<double>(tp) / static_cast<double>(seen),
                        static_cast<double>(tp) / static_cast<double>(total_gt), r.confidence});
    }
  }
  return points;
}

double average_precision(std::span<const PrPoint> points) {
  require(!points.empty(), "average precision needs at least one PR point");
  std::vector<PrPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  std::vector<double> envelope(sorted.size());
  double running = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    running = std::max(running, sorted[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ap += (sorted[i].recall - prev_recall) * envelope[i];
    prev_recall = sorted[i].recall;
  }
  return std::clamp(ap, 0.0, 1.0);
}

}  // namespace camo
