#include "camo/image.hpp"

#include <algorithm>
#include <cmath>

#include "camo/error.hpp"

namespace camo {

Image::Image(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  require(channels > 0 && height > 0 && width > 0, "image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void Image::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void clamp_unit(Image& image) {
  for (double& v : image.data()) v = std::clamp(v, 0.0, 1.0);
}

void quantize_8bit(Image& image) {
  for (double& v : image.data()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

Image crop(const Image& image, int x0, int y0, int width, int height, double pad) {
  Image out(image.channels(), height, width, pad);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const int sy = y0 + y;
      if (sy < 0 || sy >= image.height()) continue;
      for (int x = 0; x < width; ++x) {
        const int sx = x0 + x;
        if (sx < 0 || sx >= image.width()) continue;
        out.at(c, y, x) = image.at(c, sy, sx);
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int width, int height) {
  Image out(image.channels(), height, width);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(v);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fy = v - y0;
    for (int x = 0; x < width; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(u);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double fx = u - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = image.at(c, y0, x0) * (1 - fx) + image.at(c, y0, x1) * fx;
        const double bottom = image.at(c, y1, x0) * (1 - fx) + image.at(c, y1, x1) * fx;
        out.at(c, y, x) = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

}  // namespace camo
