#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "camo/error.hpp"

namespace camo {

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "Adam size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  double learning_rate() const noexcept { return lr_; }
  void set_learning_rate(double lr) noexcept { lr_ = lr; }

  // Checkpoint access.
  long steps() const noexcept { return t_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  void restore(long steps, std::vector<double> m, std::vector<double> v) {
    require(m.size() == m_.size() && v.size() == v_.size(), "Adam state size mismatch");
    t_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Multiplies the learning rate by `factor` after `patience` epochs
/// without an improvement larger than `threshold`.
struct PlateauSchedule {
  int patience = 4;
  double factor = 0.5;
  double min_lr = 1e-4;
  double threshold = 1e-4;

  double best = INFINITY;
  int bad_epochs = 0;

  /// Returns the learning rate to use for the next epoch.
  double update(double metric, double lr) {
    if (metric < best - threshold) {
      best = metric;
      bad_epochs = 0;
      return lr;
    }
    if (++bad_epochs >= patience) {
      bad_epochs = 0;
      return std::max(min_lr, lr * factor);
    }
    return lr;
  }
};

}  // namespace camo
