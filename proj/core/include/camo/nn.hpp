#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <vector>

#include "camo/rng.hpp"

namespace camo::nn {

/// Cache-line aligned storage. Vectorised kernels choose their loop
/// split from the buffer address, so a fixed alignment keeps results
/// bit-identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

/// Dense channel-major activation map.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  Buffer data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(std::size_t(c) * h * w) {}
  std::size_t plane() const noexcept { return std::size_t(height) * width; }
};

/// 2-D convolution, square kernel, zero padding. Weights are laid out
/// [out][in][ky][kx].
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding);

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel() const noexcept { return k_; }
  int stride() const noexcept { return stride_; }
  int padding() const noexcept { return pad_; }
  int out_size(int in_size) const noexcept { return (in_size + 2 * pad_ - k_) / stride_ + 1; }

  Buffer& weights() noexcept { return w_; }
  const Buffer& weights() const noexcept { return w_; }
  Buffer& bias() noexcept { return b_; }
  const Buffer& bias() const noexcept { return b_; }

  /// He-normal weights, zero bias.
  void initialize(Rng& rng);

  /// `columns`, when given, receives the im2col buffer for a later
  /// weight-gradient pass.
  Tensor forward(const Tensor& x, Buffer* columns = nullptr) const;

  /// Returns d/dx. When `columns` is non-null, accumulates d/dw and d/db.
  Tensor backward(const Tensor& x_shape_ref, const Tensor& dy,
                  const Buffer* columns = nullptr,
                  std::span<double> dw = {}, std::span<double> db = {}) const;

 private:
  void im2col(const Tensor& x, int oh, int ow, Buffer& cols) const;

  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  Buffer w_;
  Buffer b_;
};

/// x * sigmoid(x)
void silu_forward(std::span<const double> pre, std::span<double> post);
void silu_backward(std::span<const double> pre, std::span<double> grad);

inline double sigmoid(double x) noexcept {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace camo::nn
