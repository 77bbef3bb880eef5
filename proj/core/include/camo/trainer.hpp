#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "camo/dataset.hpp"
#include "camo/detector.hpp"
#include "camo/geometry.hpp"
#include "camo/losses.hpp"
#include "camo/optim.hpp"

namespace camo {

struct TrainConfig {
  int patch_height = 32;
  int patch_width = 32;
  PatchConfig patch_config = PatchConfig::small();
  LossWeights weights{};
  /// Printable colours for the NPS term; empty selects the default set.
  std::vector<std::array<double, 3>> printable_colors;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 0.03;
  std::uint64_t seed = 1;
  TransformRanges transform_ranges{};
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  int target_class = 0;
  ObjectnessMode objectness_mode = ObjectnessMode::Objectness;
  PlateauSchedule plateau{};
  std::string run_id;

  void validate() const;
};

struct TrainLogEntry {
  int epoch = 0;
  double l_obj = 0.0;
  double l_nps = 0.0;
  double l_tv = 0.0;
  double l_sal = 0.0;
  double total = 0.0;
  double learning_rate = 0.0;

  /// One line-delimited JSON record.
  std::string to_json_line() const;
};

struct TrainOptions {
  /// Where checkpoints go; empty disables all checkpoint writes.
  std::filesystem::path checkpoint_dir;
  /// Checkpoint directory to continue from.
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const TrainLogEntry&)> on_epoch;
};

struct TrainResult {
  Patch patch;
  Patch best_patch;  // lowest epoch-mean objectness loss
  std::vector<TrainLogEntry> log;
  std::filesystem::path last_checkpoint;
};

/// Optimises a patch against a frozen detector. Every target-class object
/// of every image in a batch receives the patch under an independently
/// sampled transform; only patch pixels are updated (Adam, plateau decay),
/// and they are clamped to [0, 1] after each step. Samples without
/// target-class objects are skipped.
///
/// Throws InvalidArgument when the dataset holds no target object and
/// DivergenceError on a non-finite loss.
TrainResult train_patch(const Dataset& dataset, const Detector& detector,
                        const TrainConfig& config, const TrainOptions& options = {});

enum class TransformPolicy { Randomized, Identity };

/// Composites the patch onto every target-class object. Randomized draws
/// one TransformSample per placement from a stream keyed by (seed, image
/// index, object index, placement index); Identity composites
/// axis-aligned at nominal scale. Annotations are passed through unchanged.
Dataset apply_patch_to_dataset(const Dataset& dataset, const Patch& patch,
                               const PatchConfig& config, TransformPolicy policy,
                               std::uint64_t seed, const TransformRanges& ranges = {},
                               int target_class = 0);

/// The transform used by apply_patch_to_dataset for one placement.
TransformSample placement_transform(TransformPolicy policy, std::uint64_t seed,
                                    std::size_t image_index, std::size_t object_index,
                                    std::size_t placement_index, const TransformRanges& ranges);

// Checkpoint layout: <dir>/patch.png (+ .json sidecar) and <dir>/state.json.
void write_checkpoint(const std::filesystem::path& dir, const Patch& patch, const Adam& adam,
                      const PlateauSchedule& plateau, const std::vector<TrainLogEntry>& log,
                      const Patch& best, double best_obj);

}  // namespace camo
