#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camo/box.hpp"
#include "camo/dataset.hpp"
#include "camo/detector.hpp"
#include "camo/geometry.hpp"
#include "camo/metrics.hpp"
#include "camo/trainer.hpp"

namespace camo {

enum class Condition { Clean, Noise, Patch };

std::string to_string(Condition condition);
/// Accepts "clean", "noise", "patch" in any case.
Condition parse_condition(const std::string& text);

/// Per-image reference boxes for one evaluation set.
using GroundTruth = std::vector<std::vector<Box>>;

/// Boxes the detector finds on unmodified images at `confidence`
/// (objectness times class probability, target class only).
GroundTruth derive_ground_truth(const Detector& detector, const Dataset& clean,
                                double confidence = 0.4, int target_class = 0,
                                double nms_iou = 0.45);

/// I.i.d. uniform [0, 1] pixels.
Patch make_noise_patch(int height, int width, std::uint64_t seed);

struct EvalOptions {
  double match_iou = 0.5;
  double gt_confidence = 0.4;
  double nms_iou = 0.45;
  int target_class = 0;
  TransformPolicy policy = TransformPolicy::Randomized;
  TransformRanges transform_ranges{};
  /// Draw a fresh noise patch for every image instead of one per run.
  bool noise_per_image = false;
};

struct EvalReport {
  Condition condition = Condition::Clean;
  std::vector<PrPoint> pr_points;
  double ap = 0.0;
  double match_iou = 0.5;
  double gt_confidence = 0.4;
  double nms_iou = 0.45;
  std::string interpolation = "all-points";
  std::string patch_id;
  std::optional<PatchConfig> patch_config;  // geometry used at evaluation
  std::optional<PatchConfig> train_config;  // geometry the patch was trained under
  std::uint64_t seed = 0;
  std::size_t images = 0;
  std::size_t ground_truth_boxes = 0;
  std::size_t detections = 0;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  /// "precision,recall,threshold" header plus one row per point.
  std::string to_csv() const;

  void save(const std::filesystem::path& json_path) const;
  static EvalReport load(const std::filesystem::path& json_path);
};

/// Runs one condition. `patch` is required for Condition::Patch and used
/// only for its size under Condition::Noise, where make_noise_patch(h, w,
/// seed) replaces it; it is ignored for Condition::Clean. NOISE and
/// PATCH with the same seed share every placement and transform sample.
/// Detections are decoded at threshold 0 and swept by the PR curve.
EvalReport evaluate_condition(const Detector& detector, const Dataset& images,
                              const GroundTruth& ground_truth, Condition condition,
                              const std::optional<Patch>& patch, const PatchConfig& config,
                              std::uint64_t seed, const EvalOptions& options = {});

/// Evaluates a patch trained under `trained` in the `evaluated` geometry;
/// the report records both.
EvalReport cross_config_eval(const Detector& detector, const Dataset& images,
                             const GroundTruth& ground_truth, Condition condition,
                             const Patch& patch, const PatchConfig& trained,
                             const PatchConfig& evaluated, std::uint64_t seed,
                             const EvalOptions& options = {});

}  // namespace camo
