#pragma once

#include <filesystem>

#include "camo/image.hpp"

namespace camo {

/// Reads an 8-bit PNG as a 3-channel RGB image with samples in [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image as an 8-bit PNG. Samples are clamped
/// to [0, 1] and rounded to the nearest 1/255.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace camo
