#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "camo/detector.hpp"
#include "camo/image.hpp"

namespace camo {

struct LossWeights {
  double alpha = 0.01;  // non-printability
  double beta = 2.5;    // total variation
  double gamma = 0.0;   // colourfulness; 0 disables the term
  /// When set and gamma > 0, the colourfulness term replaces the
  /// non-printability term instead of being added to it.
  bool saliency_replaces_nps = false;

  void validate() const;
};

class PrintableColorSet {
 public:
  explicit PrintableColorSet(std::vector<std::array<double, 3>> colors);

  /// 30 colours spread through the RGB cube.
  static PrintableColorSet defaults();
  /// One "R G B" triple per line (commas also accepted, '#' comments).
  static PrintableColorSet load(const std::filesystem::path& path);

  const std::vector<std::array<double, 3>>& colors() const noexcept { return colors_; }

 private:
  std::vector<std::array<double, 3>> colors_;
};

struct ColorfulnessStats {
  double mu_rg = 0.0;
  double mu_yb = 0.0;
  double sigma_rg = 0.0;
  double sigma_yb = 0.0;
};

/// Opponent-channel statistics with rg = R - G, yb = (R + G) / 2 - B;
/// sigma is the population standard deviation.
ColorfulnessStats colorfulness_stats(const Image& patch);

// Each loss optionally overwrites `grad` with d(loss)/d(pixels).

/// Mean over pixels of the Euclidean distance to the nearest printable colour.
double nps_loss(const Image& patch, const PrintableColorSet& colors, Image* grad = nullptr);

/// Mean over positions (i < H-1, j < W-1) and channels of
/// sqrt(dx^2 + dy^2 + eps). Works for any channel count.
double tv_loss(const Image& patch, Image* grad = nullptr);
inline constexpr double kTvEpsilon = 1e-8;

/// sqrt(sigma_rg^2 + sigma_yb^2) + 0.3 * sqrt(mu_rg^2 + mu_yb^2)
double saliency_loss(const Image& patch, Image* grad = nullptr);

enum class ObjectnessMode { Objectness, ObjectnessTimesClass };

struct ObjectnessOptions {
  ObjectnessMode mode = ObjectnessMode::Objectness;
  int target_class = 0;
};

/// Mean over the batch of each image's maximum objectness score. Ties in
/// the maximum go to the lowest entry index.
double objectness_loss(std::span<const DetectorOutput> batch, const ObjectnessOptions& options = {},
                       std::vector<OutputGrad>* grads = nullptr);

struct LossBreakdown {
  double total = 0.0;
  double obj = 0.0;
  double nps = 0.0;
  double tv = 0.0;
  double sal = 0.0;  // computed even when gamma == 0, for logging
};

struct TotalLossGrad {
  Image patch;                      // from the patch-only terms
  std::vector<OutputGrad> outputs;  // from the objectness term
};

/// alpha * nps + beta * tv + gamma * sal + obj, with the unweighted terms.
LossBreakdown total_loss(const Image& patch, std::span<const DetectorOutput> batch,
                         const LossWeights& weights, const PrintableColorSet& colors,
                         const ObjectnessOptions& options = {}, TotalLossGrad* grad = nullptr);

}  // namespace camo
