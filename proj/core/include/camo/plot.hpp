#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "camo/evaluator.hpp"
#include "camo/image.hpp"

namespace camo {

/// Precision-recall curves of several reports on one set of axes, each
/// drawn as a step curve coloured by condition (CLEAN blue, NOISE orange,
/// PATCH green) with its AP in the legend.
std::string render_pr_svg(std::span<const EvalReport> reports, const std::string& title = "");

/// Raster version of the same figure (axes, grid, curves and legend
/// swatches, no text).
Image render_pr_image(std::span<const EvalReport> reports, int width = 640, int height = 480);

/// Writes SVG or PNG depending on the extension of `path`.
void save_pr_plot(const std::filesystem::path& path, std::span<const EvalReport> reports,
                  const std::string& title = "");

}  // namespace camo
