#include "camo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "camo/error.hpp"

namespace camo {

void LossWeights::validate() const {
  require(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0, "loss weights must be non-negative");
}

PrintableColorSet::PrintableColorSet(std::vector<std::array<double, 3>> colors)
    : colors_(std::move(colors)) {
  require(!colors_.empty(), "printable colour set must not be empty");
  for (const auto& c : colors_) {
    for (double v : c) require(v >= 0.0 && v <= 1.0, "printable colour outside [0, 1]");
  }
}

PrintableColorSet PrintableColorSet::defaults() {
  std::vector<std::array<double, 3>> colors;
  const double levels[] = {0.1, 0.5, 0.9};
  for (double r : levels) {
    for (double g : levels) {
      for (double b : levels) colors.push_back({r, g, b});
    }
  }
  colors.push_back({0.3, 0.3, 0.3});
  colors.push_back({0.7, 0.7, 0.7});
  colors.push_back({0.55, 0.45, 0.3});
  return PrintableColorSet(std::move(colors));
}

PrintableColorSet PrintableColorSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open colour file '" + path.string() + "'");
  std::vector<std::array<double, 3>> colors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::array<double, 3> c{};
    if (!(fields >> c[0])) continue;
    if (!(fields >> c[1] >> c[2])) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 'R G B'");
    }
    colors.push_back(c);
  }
  return PrintableColorSet(std::move(colors));
}

ColorfulnessStats colorfulness_stats(const Image& patch) {
  require(patch.channels() == 3, "colourfulness needs an RGB patch");
  const auto r = patch.plane(0);
  const auto g = patch.plane(1);
  const auto b = patch.plane(2);
  const double n = static_cast<double>(patch.plane_size());
  ColorfulnessStats s;
  for (std::size_t i = 0; i < r.size(); ++i) {
    s.mu_rg += r[i] - g[i];
    s.mu_yb += 0.5 * (r[i] + g[i]) - b[i];
  }
  s.mu_rg /= n;
  s.mu_yb /= n;
  double var_rg = 0.0;
  double var_yb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double drg = r[i] - g[i] - s.mu_rg;
    const double dyb = 0.5 * (r[i] + g[i]) - b[i] - s.mu_yb;
    var_rg += drg * drg;
    var_yb += dyb * dyb;
  }
  s.sigma_rg = std::sqrt(var_rg / n);
  s.sigma_yb = std::sqrt(var_yb / n);
  return s;
}

double nps_loss(const Image& patch, const PrintableColorSet& colors, Image* grad) {
  require(patch.channels() == 3, "NPS needs an RGB patch");
  const std::size_t n = patch.plane_size();
  if (grad) *grad = Image(3, patch.height(), patch.width());
  const auto& palette = colors.colors();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> p{patch.plane(0)[i], patch.plane(1)[i], patch.plane(2)[i]};
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < palette.size(); ++k) {
      const double d0 = p[0] - palette[k][0];
      const double d1 = p[1] - palette[k][1];
      const double d2 = p[2] - palette[k][2];
      const double sq = d0 * d0 + d1 * d1 + d2 * d2;
      if (sq < best) {
        best = sq;
        best_k = k;
      }
    }
    const double dist = std::sqrt(best);
    sum += dist;
    if (grad && dist > 0.0) {
      for (int c = 0; c < 3; ++c) {
        grad->plane(c)[i] = (p[c] - palette[best_k][c]) / (dist * static_cast<double>(n));
      }
    }
  }
  return sum / static_cast<double>(n);
}

double tv_loss(const Image& patch, Image* grad) {
  const int h = patch.height();
  const int w = patch.width();
  require(h >= 2 && w >= 2, "total variation needs at least a 2x2 patch");
  const double count = static_cast<double>(patch.channels()) * (h - 1) * (w - 1);
  if (grad) *grad = Image(patch.channels(), h, w);
  double sum = 0.0;
  for (int c = 0; c < patch.channels(); ++c) {
    for (int i = 0; i < h - 1; ++i) {
      for (int j = 0; j < w - 1; ++j) {
        const double p = patch.at(c, i, j);
        const double dx = patch.at(c, i, j + 1) - p;
        const double dy = patch.at(c, i + 1, j) - p;
        const double t = std::sqrt(dx * dx + dy * dy + kTvEpsilon);
        sum += t;
        if (grad) {
          const double s = 1.0 / (t * count);
          grad->at(c, i, j + 1) += dx * s;
          grad->at(c, i + 1, j) += dy * s;
          grad->at(c, i, j) -= (dx + dy) * s;
        }
      }
    }
  }
  return sum / count;
}

double saliency_loss(const Image& patch, Image* grad) {
  const ColorfulnessStats s = colorfulness_stats(patch);
  const double spread = std::sqrt(s.sigma_rg * s.sigma_rg + s.sigma_yb * s.sigma_yb);
  const double offset = std::sqrt(s.mu_rg * s.mu_rg + s.mu_yb * s.mu_yb);
  if (grad) {
    *grad = Image(3, patch.height(), patch.width());
    const double n = static_cast<double>(patch.plane_size());
    const auto r = patch.plane(0);
    const auto g = patch.plane(1);
    const auto b = patch.plane(2);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double rg = r[i] - g[i];
      const double yb = 0.5 * (r[i] + g[i]) - b[i];
      double d_rg = 0.0;
      double d_yb = 0.0;
      if (spread > 0.0) {
        d_rg += (rg - s.mu_rg) / (n * spread);
        d_yb += (yb - s.mu_yb) / (n * spread);
      }
      if (offset > 0.0) {
        d_rg += 0.3 * s.mu_rg / (n * offset);
        d_yb += 0.3 * s.mu_yb / (n * offset);
      }
      grad->plane(0)[i] = d_rg + 0.5 * d_yb;
      grad->plane(1)[i] = -d_rg + 0.5 * d_yb;
      grad->plane(2)[i] = -d_yb;
    }
  }
  return spread + 0.3 * offset;
}

double objectness_loss(std::span<const DetectorOutput> batch, const ObjectnessOptions& options,
                       std::vector<OutputGrad>* grads) {
  require(!batch.empty(), "objectness loss needs a non-empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grads) grads->clear();
  double sum = 0.0;
  for (const DetectorOutput& out : batch) {
    require(out.entries() > 0, "detector output has no entries");
    const bool times_class = options.mode == ObjectnessMode::ObjectnessTimesClass;
    if (times_class) {
      require(options.target_class >= 0 && options.target_class < out.classes,
              "target class outside the detector's class range");
    }
    std::size_t best_i = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < out.entries(); ++i) {
      double score = out.objectness[i];
      require(score >= 0.0 && score <= 1.0, "objectness outside [0, 1]");
      if (times_class) score *= out.class_row(i)[options.target_class];
      if (score > best) {
        best = score;
        best_i = i;
      }
    }
    sum += best;
    if (grads) {
      OutputGrad g = OutputGrad::zeros_like(out);
      if (times_class) {
        g.objectness[best_i] = inv * out.class_row(best_i)[options.target_class];
        g.class_probs[best_i * out.classes + options.target_class] = inv * out.objectness[best_i];
      } else {
        g.objectness[best_i] = inv;
      }
      grads->push_back(std::move(g));
    }
  }
  return sum * inv;
}

LossBreakdown total_loss(const Image& patch, std::span<const DetectorOutput> batch,
                         const LossWeights& weights, const PrintableColorSet& colors,
                         const ObjectnessOptions& options, TotalLossGrad* grad) {
  weights.validate();
  LossBreakdown b;
  Image g_nps, g_tv, g_sal;
  b.obj = objectness_loss(batch, options, grad ? &grad->outputs : nullptr);
  b.nps = nps_loss(patch, colors, grad ? &g_nps : nullptr);
  b.tv = tv_loss(patch, grad ? &g_tv : nullptr);
  b.sal = saliency_loss(patch, grad ? &g_sal : nullptr);

  const double alpha =
      (weights.saliency_replaces_nps && weights.gamma > 0.0) ? 0.0 : weights.alpha;
  b.total = alpha * b.nps + weights.beta * b.tv + weights.gamma * b.sal + b.obj;
  if (grad) {
    grad->patch = Image(3, patch.height(), patch.width());
    auto out = grad->patch.data();
    const auto a = g_nps.data();
    const auto t = g_tv.data();
    const auto s = g_sal.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = alpha * a[i] + weights.beta * t[i] + weights.gamma * s[i];
    }
  }
  return b;
}

}  // namespace camo
