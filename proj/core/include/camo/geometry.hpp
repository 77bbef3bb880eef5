#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camo/box.hpp"
#include "camo/image.hpp"
#include "camo/rng.hpp"

namespace camo {

enum class PlacementMode { OnTopCenter, SideOffset, TwoOnTop };

std::string to_string(PlacementMode mode);
/// Accepts "on-top", "side" and "two-on-top" (and the enum spellings).
PlacementMode parse_placement(const std::string& text);

/// Patch geometry relative to the annotated object box.
struct PatchConfig {
  double rel_width = 0.2;
  double rel_height = 0.2;
  PlacementMode placement = PlacementMode::OnTopCenter;
  int count = 1;
  /// Extra horizontal clearance between box edge and side patch, as a
  /// fraction of the box width.
  double side_gap = 0.05;

  /// Builds a config with `count` implied by the placement mode.
  static PatchConfig make(double rel_width, double rel_height, PlacementMode placement);

  // Experiment geometries.
  static PatchConfig large() { return make(0.2, 0.2, PlacementMode::OnTopCenter); }
  static PatchConfig small() { return make(0.1, 0.1, PlacementMode::OnTopCenter); }
  static PatchConfig large_side() { return make(0.2, 0.2, PlacementMode::SideOffset); }
  static PatchConfig two_small() { return make(0.075, 0.075, PlacementMode::TwoOnTop); }

  void validate() const;
  /// Stable identifier, e.g. "0.1x0.1-on-top".
  std::string id() const;

  friend bool operator==(const PatchConfig&, const PatchConfig&) = default;
};

/// Provenance stored alongside the patch pixels.
struct PatchMeta {
  std::optional<PatchConfig> config;
  std::string run_id;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> attributes;
};

/// The optimisation variable: a 3-channel pixel grid in [0, 1].
struct Patch {
  Image pixels;
  PatchMeta meta;

  int height() const noexcept { return pixels.height(); }
  int width() const noexcept { return pixels.width(); }

  /// Throws InvalidArgument unless 3 channels, at least 2x2, values in [0, 1].
  void validate() const;
};

/// Uniform random patch, the optimisation starting point.
Patch random_patch(int height, int width, std::uint64_t seed);

struct Range {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

/// Sampling ranges for the physical jitter applied before compositing.
struct TransformRanges {
  Range scale{0.9, 1.1};
  Range noise{0.0, 0.1};
  Range contrast{0.8, 1.2};
  Range brightness{-0.1, 0.1};

  static TransformRanges identity() { return {{1, 1}, {0, 0}, {1, 1}, {0, 0}}; }
  void validate() const;
  friend bool operator==(const TransformRanges&, const TransformRanges&) = default;
};

struct TransformSample {
  double angle_deg = 0.0;
  double scale = 1.0;
  double noise_amplitude = 0.0;
  double contrast = 1.0;
  double brightness = 0.0;
  /// Keys the per-pixel additive noise field.
  std::uint64_t noise_seed = 0;

  static TransformSample identity(double angle_deg = 0.0) {
    return {angle_deg, 1.0, 0.0, 1.0, 0.0, 0};
  }
  friend bool operator==(const TransformSample&, const TransformSample&) = default;
};

/// Angle is always uniform on [0, 360); the remaining fields are uniform
/// over their configured ranges.
TransformSample sample_transform(Rng& rng, const TransformRanges& ranges);

/// Target rectangle of one patch instance, in image pixels.
struct Placement {
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double height = 0.0;
  friend bool operator==(const Placement&, const Placement&) = default;
};

std::vector<Placement> patch_placements(const Annotation& annotation, const PatchConfig& config);

/// One written pixel: its bilinear taps into the patch and the local
/// derivative of the written value with respect to the interpolated sample.
struct FootprintSample {
  int pixel = 0;  // y * width + x in the target image
  std::array<int, 4> taps{};
  std::array<double, 4> weights{};
  std::array<double, 3> gain{};  // per channel; zero where the value clamped
};

/// Everything needed to backpropagate through one composite call.
struct CompositeTrace {
  std::vector<FootprintSample> samples;
  int patch_height = 0;
  int patch_width = 0;
  bool outside = false;
  std::string warning;
};

/// Warps the patch (rotation about the placement centre, scale, bilinear
/// resampling), applies contrast, brightness and additive noise, clamps to
/// [0, 1] and overwrites the covered pixels of `image`. Pixels outside the
/// rotated footprint are left untouched. A placement that misses the image
/// leaves it unchanged and sets `outside` and `warning` on the trace.
CompositeTrace composite_patch_inplace(Image& image, const Image& patch,
                                       const Placement& placement,
                                       const TransformSample& transform);

Image composite_patch(const Image& image, const Patch& patch, const Placement& placement,
                      const TransformSample& transform);

/// Accumulates d(loss)/d(patch) into `patch_grad` given d(loss)/d(image).
/// `traces` must be in the order the composites were applied; a pixel
/// written more than once only routes gradient to its final writer.
void backprop_to_patch(std::span<const CompositeTrace> traces, const Image& image_grad,
                       Image& patch_grad);

// Persistence: 8-bit PNG plus a JSON sidecar at `<png>.json`.
void save_patch(const std::filesystem::path& png_path, const Patch& patch);
Patch load_patch(const std::filesystem::path& png_path);
std::filesystem::path patch_sidecar_path(const std::filesystem::path& png_path);

}  // namespace camo
