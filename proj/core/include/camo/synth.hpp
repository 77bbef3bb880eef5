#pragma once

#include <cstdint>
#include <string>

#include "camo/dataset.hpp"

namespace camo {

/// Procedural aerial-style scenes: textured ground, clutter (buildings,
/// tanks, road strips) and plane sprites at random orientation and scale.
/// Planes carry class 0; their boxes are the axis-aligned envelope of the
/// rotated sprite and lie fully inside the image. Plane centres fall in
/// distinct `cell`-sized grid cells.
struct SynthConfig {
  int image_size = 256;
  int count = 64;
  int min_planes = 1;
  int max_planes = 3;
  double min_span = 56.0;  // wingspan in pixels
  double max_span = 96.0;
  int max_clutter = 4;
  // Plane grey level before per-channel tint.
  double min_tone = 0.72;
  double max_tone = 0.95;
  double shadow_level = 0.12;
  int cell = 32;
  std::uint64_t seed = 1;
  std::string id_prefix = "synth";

  void validate() const;
};

/// Deterministic in (config, seed). Sample i is generated from its own
/// stream, so datasets with different counts share a common prefix.
Dataset generate_synthetic(const SynthConfig& config);

}  // namespace camo
