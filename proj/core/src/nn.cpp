#include "camo/nn.hpp"

#include <Eigen/Core>
#include <cmath>

#include "camo/error.hpp"

namespace camo::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding) {
  require(in_ > 0 && out_ > 0 && k_ > 0 && stride_ > 0 && pad_ >= 0, "invalid conv geometry");
  w_.assign(std::size_t(out_) * in_ * k_ * k_, 0.0);
  b_.assign(out_, 0.0);
}

void Conv2d::initialize(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (in_ * k_ * k_)));
  for (double& w : w_) w = normal(rng);
  std::fill(b_.begin(), b_.end(), 0.0);
}

void Conv2d::im2col(const Tensor& x, int oh, int ow, Buffer& cols) const {
  const std::size_t n = std::size_t(oh) * ow;
  cols.assign(std::size_t(in_) * k_ * k_ * n, 0.0);
  for (int c = 0; c < in_; ++c) {
    const double* src = x.data.data() + c * x.plane();
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        double* dst = cols.data() + ((std::size_t(c) * k_ + ky) * k_ + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= x.width) continue;
            dst[std::size_t(oy) * ow + ox] = src[std::size_t(iy) * x.width + ix];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, Buffer* columns) const {
  require(x.channels == in_, "conv input channel mismatch");
  const int oh = out_size(x.height);
  const int ow = out_size(x.width);
  Tensor y(out_, oh, ow);
  const Eigen::Index n = Eigen::Index(oh) * ow;
  const Eigen::Index kdim = Eigen::Index(in_) * k_ * k_;
  ConstMapMat w(w_.data(), out_, kdim);
  MapMat out(y.data.data(), out_, n);

  const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;
  Buffer local;
  Buffer& cols = columns ? *columns : local;
  if (direct) {
    out.noalias() = w * ConstMapMat(x.data.data(), in_, n);
    if (columns) columns->assign(x.data.begin(), x.data.end());
  } else {
    im2col(x, oh, ow, cols);
    out.noalias() = w * ConstMapMat(cols.data(), kdim, n);
  }
  for (int o = 0; o < out_; ++o) out.row(o).array() += b_[o];
  return y;
}

Tensor Conv2d::backward(const Tensor& x_shape_ref, const Tensor& dy,
                        const Buffer* columns, std::span<double> dw,
                        std::span<double> db) const {
  const int oh = dy.height;
  const int ow = dy.width;
  const Eigen::Index n = Eigen::Index(oh) * ow;
  const Eigen::Index kdim = Eigen::Index(in_) * k_ * k_;
  ConstMapMat w(w_.data(), out_, kdim);
  ConstMapMat g(dy.data.data(), out_, n);

  if (columns) {
    require(dw.size() == w_.size() && db.size() == b_.size(), "gradient buffer size mismatch");
    const RowMat gw = g * ConstMapMat(columns->data(), kdim, n).transpose();
    MapMat(dw.data(), out_, kdim) += gw;
    for (int o = 0; o < out_; ++o) db[o] += g.row(o).sum();
  }

  Tensor dx(in_, x_shape_ref.height, x_shape_ref.width);
  if (k_ == 1 && stride_ == 1 && pad_ == 0) {
    MapMat(dx.data.data(), in_, n).noalias() = w.transpose() * g;
    return dx;
  }
  RowMat dcols = w.transpose() * g;
  for (int c = 0; c < in_; ++c) {
    double* dst = dx.data.data() + c * dx.plane();
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const double* src = dcols.data() + ((std::size_t(c) * k_ + ky) * k_ + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= dx.height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= dx.width) continue;
            dst[std::size_t(iy) * dx.width + ix] += src[std::size_t(oy) * ow + ox];
          }
        }
      }
    }
  }
  return dx;
}

void silu_forward(std::span<const double> pre, std::span<double> post) {
  for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] * sigmoid(pre[i]);
}

void silu_backward(std::span<const double> pre, std::span<double> grad) {
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double s = sigmoid(pre[i]);
    grad[i] *= s * (1.0 + pre[i] * (1.0 - s));
  }
}

}  // namespace camo::nn
