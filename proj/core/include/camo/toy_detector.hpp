#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "camo/dataset.hpp"
#include "camo/detector.hpp"
#include "camo/nn.hpp"

namespace camo {

/// Small fully-convolutional single-anchor grid detector.
struct ToyArchitecture {
  int input_size = 256;
  std::vector<int> channels{12, 24, 32, 48, 64, 64};
  std::vector<int> strides{2, 2, 2, 2, 2, 1};
  int classes = 1;
  double anchor_w = 72.0;
  double anchor_h = 72.0;

  int stride() const;
  int grid() const { return input_size / stride(); }
  void validate() const;
  friend bool operator==(const ToyArchitecture&, const ToyArchitecture&) = default;
};

class ToyDetector final : public Detector {
 public:
  static constexpr const char* kFormatTag = "camopatch-toydet/1";

  explicit ToyDetector(ToyArchitecture arch = {}, std::uint64_t seed = 0);

  int input_width() const override { return arch_.input_size; }
  int input_height() const override { return arch_.input_size; }
  int stride() const override { return arch_.stride(); }
  int anchors() const override { return 1; }
  int classes() const override { return arch_.classes; }

  ForwardResult forward_traced(const Image& image) const override;
  Image input_gradient(const ForwardResult& forward, const OutputGrad& grad) const override;

  const ToyArchitecture& architecture() const noexcept { return arch_; }
  std::size_t parameter_count() const;

  /// FNV-1a over all parameters; changes iff any weight bit changes.
  std::uint64_t checksum() const;

  /// Binary weight file: tag line, JSON architecture line, raw doubles.
  void save(const std::filesystem::path& path) const;
  static ToyDetector load(const std::filesystem::path& path);

  friend bool operator==(const ToyDetector& a, const ToyDetector& b);

  // Training support.
  struct State;
  std::vector<double> flatten_parameters() const;
  void assign_parameters(std::span<const double> flat);
  /// Per-image YOLO-style loss and its gradient with respect to all
  /// parameters (accumulated into `param_grad`, flattened order).
  double accumulate_training_gradient(const Image& image, std::span<const Annotation> targets,
                                      std::span<double> param_grad) const;

 private:
  std::unique_ptr<State> run(const Image& image, bool keep_columns) const;
  DetectorOutput decode_head(const nn::Tensor& head) const;
  nn::Tensor backward(const State& state, nn::Tensor head_grad, std::span<double> param_grad,
                      bool weight_grads) const;

  ToyArchitecture arch_;
  std::vector<nn::Conv2d> layers_;  // hidden layers followed by the 1x1 head
};

struct DetectorTrainConfig {
  int epochs = 24;
  int batch_size = 8;
  double learning_rate = 2e-3;
  std::uint64_t seed = 1;
  double min_holdout_ap = 0.90;
  ToyArchitecture architecture{};
};

struct DetectorEpochLog {
  int epoch = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct DetectorTrainResult {
  ToyDetector detector;
  std::vector<DetectorEpochLog> log;
  double holdout_ap = 0.0;  // at confidence 0.4, IoU 0.5; NaN without holdout
  bool converged = false;   // holdout_ap >= min_holdout_ap
};

/// Trains on every annotation whose class is below the architecture's
/// class count. Deterministic for a fixed seed.
DetectorTrainResult train_toy_detector(
    const Dataset& train, const DetectorTrainConfig& config, const Dataset* holdout = nullptr,
    const std::function<void(const DetectorEpochLog&)>& on_epoch = {});

/// AP of `detector` against the dataset's own annotations of `class_id`.
double detector_ap(const Detector& detector, const Dataset& dataset, int class_id,
                   double conf_threshold = 0.4, double match_iou = 0.5, double nms_iou = 0.45);

}  // namespace camo
