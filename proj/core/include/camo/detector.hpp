#pragma once

#include <memory>
#include <span>
#include <vector>

#include "camo/box.hpp"
#include "camo/image.hpp"

namespace camo {

/// Pre-decoding output of a grid detector for one image.
///
/// Entries are indexed by `(cell_y * grid_w + cell_x) * anchors + anchor`;
/// that flat position is the "cell index" used for deterministic ordering.
struct DetectorOutput {
  int grid_h = 0;
  int grid_w = 0;
  int anchors = 0;
  int classes = 0;
  std::vector<Box> boxes;            // decoded, in input-image pixels
  std::vector<double> objectness;    // in [0, 1]
  std::vector<double> class_probs;   // entries() * classes, rows sum to 1

  std::size_t entries() const noexcept { return objectness.size(); }
  std::span<const double> class_row(std::size_t entry) const noexcept {
    return std::span<const double>(class_probs).subspan(entry * classes, classes);
  }
  void validate() const;
};

/// Gradient of a scalar loss with respect to the probabilistic outputs of
/// a DetectorOutput (same layout). Box gradients are not carried.
struct OutputGrad {
  std::vector<double> objectness;
  std::vector<double> class_probs;

  static OutputGrad zeros_like(const DetectorOutput& output) {
    return {std::vector<double>(output.objectness.size(), 0.0),
            std::vector<double>(output.class_probs.size(), 0.0)};
  }
};

struct Detection {
  Box box;
  int class_id = 0;
  double confidence = 0.0;  // objectness * class probability
  int cell_index = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Opaque per-call activations kept for the backward pass.
class ForwardState {
 public:
  virtual ~ForwardState() = default;
};

struct ForwardResult {
  DetectorOutput output;
  std::unique_ptr<ForwardState> state;
};

/// Adapter contract for grid-output detectors. Implementations are
/// immutable after construction; every member is safe to call
/// concurrently.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  virtual int stride() const = 0;
  virtual int anchors() const = 0;
  virtual int classes() const = 0;

  /// Throws InvalidArgument on a wrong input size.
  virtual ForwardResult forward_traced(const Image& image) const = 0;

  /// d(loss)/d(input pixels) given d(loss)/d(outputs) of a traced forward.
  virtual Image input_gradient(const ForwardResult& forward, const OutputGrad& grad) const = 0;

  DetectorOutput forward(const Image& image) const { return forward_traced(image).output; }
  std::vector<DetectorOutput> forward_batch(std::span<const Image> images) const;

 protected:
  /// Shared size check with the expected-size message.
  void check_input(const Image& image) const;
};

struct DecodeOptions {
  double conf_threshold = 0.4;
  double nms_iou = 0.45;
  bool class_agnostic_nms = false;
};

/// Thresholds at objectness * class probability (best class per entry),
/// then greedily suppresses per class at IoU >= nms_iou. Ties in
/// confidence are broken by ascending cell index. Sorted by descending
/// confidence.
std::vector<Detection> decode(const DetectorOutput& output, const DecodeOptions& options = {});

/// An image rescaled to a detector's input size, with the factors needed
/// to map boxes back (source = scaled / factor).
struct ScaledImage {
  Image image;
  std::vector<Annotation> annotations;
  double scale_x = 1.0;
  double scale_y = 1.0;
};

ScaledImage fit_to_detector(const Image& image, std::span<const Annotation> annotations,
                            const Detector& detector);

}  // namespace camo
