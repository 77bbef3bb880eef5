#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "camo/box.hpp"
#include "camo/detector.hpp"
#include "camo/image.hpp"
#include "camo/losses.hpp"
#include "camo/metrics.hpp"
#include "camo/rng.hpp"

namespace camo::testing {

// Independent reference implementations. They index pixels as [y][x][c]
// on a copied nested vector so they share no code with the library.

using Grid = std::vector<std::vector<std::array<double, 3>>>;

inline Grid to_grid(const Image& img) {
  Grid g(img.height(), std::vector<std::array<double, 3>>(img.width()));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) g[y][x][c] = img.at(c, y, x);
  return g;
}

inline double nps_oracle(const Image& img, const std::vector<std::array<double, 3>>& colors) {
  const Grid g = to_grid(img);
  double total = 0.0;
  int n = 0;
  for (const auto& row : g) {
    for (const auto& px : row) {
      double best = INFINITY;
      for (const auto& col : colors) {
        const double d = std::sqrt((px[0] - col[0]) * (px[0] - col[0]) +
                                   (px[1] - col[1]) * (px[1] - col[1]) +
                                   (px[2] - col[2]) * (px[2] - col[2]));
        best = std::min(best, d);
      }
      total += best;
      ++n;
    }
  }
  return total / n;
}

inline double tv_oracle(const Image& img) {
  double total = 0.0;
  int n = 0;
  for (int c = 0; c < img.channels(); ++c) {
    for (int i = 0; i + 1 < img.height(); ++i) {
      for (int j = 0; j + 1 < img.width(); ++j) {
        const double dx = img.at(c, i, j + 1) - img.at(c, i, j);
        const double dy = img.at(c, i + 1, j) - img.at(c, i, j);
        total += std::sqrt(dx * dx + dy * dy + 1e-8);
        ++n;
      }
    }
  }
  return total / n;
}

inline double saliency_oracle(const Image& img) {
  std::vector<double> rg, yb;
  for (const auto& row : to_grid(img)) {
    for (const auto& px : row) {
      rg.push_back(px[0] - px[1]);
      yb.push_back(0.5 * (px[0] + px[1]) - px[2]);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  auto stdev = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
  };
  const double mrg = mean(rg), myb = mean(yb), srg = stdev(rg), syb = stdev(yb);
  return std::sqrt(srg * srg + syb * syb) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
}

inline DetectorOutput random_output(Rng& rng, int entries, int classes) {
  DetectorOutput o;
  o.grid_h = 1;
  o.grid_w = entries;
  o.anchors = 1;
  o.classes = classes;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < entries; ++i) {
    o.boxes.push_back({u(rng) * 50, u(rng) * 50, 5, 5});
    o.objectness.push_back(u(rng));
    std::vector<double> row(classes);
    double s = 0.0;
    for (double& v : row) s += (v = u(rng) + 0.01);
    for (double v : row) o.class_probs.push_back(v / s);
  }
  return o;
}

inline double objectness_oracle(const std::vector<DetectorOutput>& batch) {
  double total = 0.0;
  for (const auto& o : batch) total += *std::max_element(o.objectness.begin(), o.objectness.end());
  return total / batch.size();
}

inline std::vector<std::array<double, 3>> random_colors(Rng& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::array<double, 3>> c(n);
  for (auto& col : c) col = {u(rng), u(rng), u(rng)};
  return c;
}

// Moves pixels whose two nearest palette colours are almost equidistant
// so finite differences do not straddle the minimum's kink.
inline void separate_nearest_colors(Image& patch, const PrintableColorSet& colors) {
  for (int y = 0; y < patch.height(); ++y) {
    for (int x = 0; x < patch.width(); ++x) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        std::vector<double> d;
        for (const auto& col : colors.colors()) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += std::pow(patch.at(c, y, x) - col[c], 2);
          d.push_back(std::sqrt(s));
        }
        std::sort(d.begin(), d.end());
        if (d.size() < 2 || d[1] - d[0] >= 1e-2) break;
        const int c = attempt % 3;
        patch.at(c, y, x) = std::fmod(patch.at(c, y, x) + 0.037, 0.9) + 0.05;
      }
    }
  }
}

struct Instance {
  std::vector<std::vector<Detection>> dets;
  std::vector<std::vector<Box>> gts;
};

inline Box random_box(Rng& rng) {
  // Coarse coordinates make overlaps, exact IoU ties and duplicate boxes
  // common in small instances.
  std::uniform_int_distribution<int> pos(0, 4), size(2, 4);
  return {double(pos(rng) * 2), double(pos(rng) * 2), double(size(rng) * 2), double(size(rng) * 2)};
}

inline Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> images(1, 3), count(0, 6), level(1, 5);
  Instance inst;
  const int n = images(rng);
  inst.dets.resize(n);
  inst.gts.resize(n);
  int cell = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = count(rng); k > 0; --k) inst.gts[i].push_back(random_box(rng));
    for (int k = count(rng); k > 0; --k) {
      // Few distinct confidence levels, so ties across images occur.
      inst.dets[i].push_back({random_box(rng), 0, level(rng) / 5.0, cell++ % 7});
    }
  }
  if (inst.gts[0].empty()) inst.gts[0].push_back(random_box(rng));
  return inst;
}

// Recomputes the curve one threshold at a time: keep only detections at
// or above the threshold, order them, match greedily, count.
inline std::vector<PrPoint> pr_oracle(const Instance& inst, double match_iou) {
  struct Item {
    double conf;
    std::size_t image;
    int cell;
    std::size_t index;
  };
  std::vector<Item> all;
  std::set<double, std::greater<>> thresholds;
  std::size_t total_gt = 0;
  for (std::size_t i = 0; i < inst.dets.size(); ++i) {
    total_gt += inst.gts[i].size();
    for (std::size_t k = 0; k < inst.dets[i].size(); ++k) {
      const auto& d = inst.dets[i][k];
      all.push_back({d.confidence, i, d.cell_index, k});
      thresholds.insert(d.confidence);
    }
  }
  if (all.empty()) return {{0.0, 0.0, 1.0}};
  std::vector<PrPoint> out;
  for (double t : thresholds) {
    std::vector<Item> kept;
    for (const auto& it : all)
      if (it.conf >= t) kept.push_back(it);
    std::sort(kept.begin(), kept.end(), [](const Item& a, const Item& b) {
      return std::tie(b.conf, a.image, a.cell, a.index) < std::tie(a.conf, b.image, b.cell, b.index);
    });
    std::vector<std::vector<char>> used(inst.gts.size());
    for (std::size_t i = 0; i < inst.gts.size(); ++i) used[i].assign(inst.gts[i].size(), 0);
    int tp = 0;
    for (const auto& it : kept) {
      const Box& b = inst.dets[it.image][it.index].box;
      int choice = -1;
      double best = 0.0;
      for (std::size_t g = 0; g < inst.gts[it.image].size(); ++g) {
        const double o = iou(b, inst.gts[it.image][g]);
        if (!used[it.image][g] && o >= match_iou && (choice < 0 || o > best)) {
          choice = static_cast<int>(g);
          best = o;
        }
      }
      if (choice >= 0) {
        used[it.image][choice] = 1;
        ++tp;
      }
    }
    out.push_back({double(tp) / kept.size(), double(tp) / total_gt, t});
  }
  return out;
}

// Riemann sum of the interpolated precision p(r) = max{p_i : r_i >= r}.
inline double ap_oracle(const std::vector<PrPoint>& points) {
  const int steps = 200000;
  double area = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double r = (s + 0.5) / steps;
    double p = 0.0;
    for (const auto& pt : points)
      if (pt.recall >= r) p = std::max(p, pt.precision);
    area += p / steps;
  }
  return area;
}

}  // namespace camo::testing
