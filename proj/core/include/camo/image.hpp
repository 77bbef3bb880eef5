#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace camo {

/// Planar (channel-major) image with double-precision samples.
///
/// Samples are addressed as (channel, row, column). Colour images carry
/// three channels in R, G, B order and nominal values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, double fill = 0.0);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> plane(int c) noexcept {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> plane(int c) const noexcept {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Image& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }
  void fill(double value);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

void clamp_unit(Image& image);

/// Rounds every sample to the nearest multiple of 1/255.
void quantize_8bit(Image& image);

/// Copies the window [x0, x0+width) x [y0, y0+height); samples outside the
/// source are set to `pad`.
Image crop(const Image& image, int x0, int y0, int width, int height, double pad = 0.0);

Image resize_bilinear(const Image& image, int width, int height);

}  // namespace camo
