#include "camo/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "camo/error.hpp"
#include "camo/rng.hpp"

namespace camo {

namespace {

struct Vec2 {
  double x, y;
};
using Polygon = std::vector<Vec2>;

struct Colour {
  double r, g, b;
};

// Convex pieces of a plane in a unit frame: nose towards -y, length 1.
std::vector<Polygon> plane_parts(bool swept, double wing_span, double body_width) {
  const double half = 0.5 * wing_span;
  const double bw = 0.5 * body_width;
  std::vector<Polygon> parts;
  parts.push_back({{0.0, -0.5}, {bw, -0.38}, {bw, 0.45}, {-bw, 0.45}, {-bw, -0.38}});
  if (swept) {
    parts.push_back({{bw, -0.12}, {half, 0.16}, {half, 0.24}, {bw, 0.10}});
    parts.push_back({{-bw, -0.12}, {-bw, 0.10}, {-half, 0.24}, {-half, 0.16}});
  } else {
    parts.push_back({{bw, -0.08}, {half, -0.02}, {half, 0.08}, {bw, 0.10}});
    parts.push_back({{-bw, -0.08}, {-bw, 0.10}, {-half, 0.08}, {-half, -0.02}});
  }
  const double tail = 0.36 * half;
  parts.push_back({{bw, 0.32}, {tail, 0.44}, {tail, 0.5}, {bw, 0.46}});
  parts.push_back({{-bw, 0.32}, {-bw, 0.46}, {-tail, 0.5}, {-tail, 0.44}});
  return parts;
}

bool inside_convex(const Polygon& poly, double x, double y) {
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    if (cross > 0) pos = true;
    if (cross < 0) neg = true;
    if (pos && neg) return false;
  }
  return true;
}

// Supersampled coverage of a union of convex polygons, blended into the image.
void fill_polygons(Image& image, const std::vector<Polygon>& parts, Colour colour,
                   double shade_gradient = 0.0, Vec2 shade_dir = {0, 0}) {
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (const auto& p : parts) {
    for (const Vec2& v : p) {
      x0 = std::min(x0, v.x);
      y0 = std::min(y0, v.y);
      x1 = std::max(x1, v.x);
      y1 = std::max(y1, v.y);
    }
  }
  const int xb = std::max(0, static_cast<int>(std::floor(x0)));
  const int xe = std::min(image.width(), static_cast<int>(std::ceil(x1)) + 1);
  const int yb = std::max(0, static_cast<int>(std::floor(y0)));
  const int ye = std::min(image.height(), static_cast<int>(std::ceil(y1)) + 1);
  const double cx = 0.5 * (x0 + x1);
  const double cy = 0.5 * (y0 + y1);
  const double extent = std::max(1.0, std::max(x1 - x0, y1 - y0));
  constexpr int kSub = 3;
  for (int y = yb; y < ye; ++y) {
    for (int x = xb; x < xe; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = x + (sx + 0.5) / kSub;
          const double py = y + (sy + 0.5) / kSub;
          for (const auto& p : parts) {
            if (inside_convex(p, px, py)) {
              ++hits;
              break;
            }
          }
        }
      }
      if (hits == 0) continue;
      const double a = static_cast<double>(hits) / (kSub * kSub);
      const double t = ((x + 0.5 - cx) * shade_dir.x + (y + 0.5 - cy) * shade_dir.y) / extent;
      const double shade = 1.0 + shade_gradient * t;
      const std::array<double, 3> rgb{colour.r * shade, colour.g * shade, colour.b * shade};
      for (int c = 0; c < 3; ++c) {
        double& v = image.at(c, y, x);
        v = (1.0 - a) * v + a * std::clamp(rgb[c], 0.0, 1.0);
      }
    }
  }
}

Polygon transform_polygon(const Polygon& p, double scale_x, double scale_y, double angle,
                          Vec2 centre) {
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  Polygon out;
  for (const Vec2& v : p) {
    const double x = v.x * scale_x;
    const double y = v.y * scale_y;
    out.push_back({centre.x + cs * x - sn * y, centre.y + sn * x + cs * y});
  }
  return out;
}

void paint_ground(Image& image, Rng& rng) {
  static constexpr std::array<Colour, 5> palette{{{0.36, 0.40, 0.30},
                                                  {0.45, 0.44, 0.40},
                                                  {0.30, 0.34, 0.26},
                                                  {0.50, 0.47, 0.38},
                                                  {0.40, 0.40, 0.42}}};
  const Colour base = palette[rng() % palette.size()];
  const Colour alt = palette[rng() % palette.size()];
  // Low-frequency value noise on a coarse lattice.
  constexpr int kLattice = 6;
  std::array<double, (kLattice + 1) * (kLattice + 1)> lattice{};
  for (double& v : lattice) v = uniform(rng, 0.0, 1.0);
  const int n = image.width();
  const double fine = uniform(rng, 0.01, 0.04);
  const std::uint64_t noise_key = rng();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < n; ++x) {
      const double gx = static_cast<double>(x) / n * kLattice;
      const double gy = static_cast<double>(y) / image.height() * kLattice;
      const int ix = std::min(static_cast<int>(gx), kLattice - 1);
      const int iy = std::min(static_cast<int>(gy), kLattice - 1);
      const double fx = gx - ix;
      const double fy = gy - iy;
      const double sx = fx * fx * (3 - 2 * fx);
      const double sy = fy * fy * (3 - 2 * fy);
      auto at = [&](int a, int b) { return lattice[b * (kLattice + 1) + a]; };
      const double t = (at(ix, iy) * (1 - sx) + at(ix + 1, iy) * sx) * (1 - sy) +
                       (at(ix, iy + 1) * (1 - sx) + at(ix + 1, iy + 1) * sx) * sy;
      const std::array<double, 3> rgb{base.r * (1 - t) + alt.r * t, base.g * (1 - t) + alt.g * t,
                                      base.b * (1 - t) + alt.b * t};
      for (int c = 0; c < 3; ++c) {
        const std::uint64_t key = noise_key ^ mix64((static_cast<std::uint64_t>(y) * n + x) * 4 + c);
        image.at(c, y, x) = rgb[c] + fine * (2.0 * hash_uniform(key) - 1.0);
      }
    }
  }
}

void paint_clutter(Image& image, Rng& rng, int max_items) {
  const int size = image.width();
  const int items = static_cast<int>(rng() % (max_items + 1));
  for (int i = 0; i < items; ++i) {
    const int kind = static_cast<int>(rng() % 3);
    const Vec2 centre{uniform(rng, 0, size), uniform(rng, 0, size)};
    const double angle = uniform(rng, 0, std::numbers::pi);
    const double tone = uniform(rng, 0.15, 0.75);
    const Colour colour{tone * uniform(rng, 0.85, 1.15), tone * uniform(rng, 0.85, 1.15),
                        tone * uniform(rng, 0.85, 1.15)};
    if (kind == 0) {  // building
      const Polygon unit{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
      fill_polygons(image, {transform_polygon(unit, uniform(rng, 14, 48), uniform(rng, 14, 48),
                                              angle, centre)},
                    colour);
    } else if (kind == 1) {  // road strip
      const Polygon unit{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
      fill_polygons(image, {transform_polygon(unit, uniform(rng, 4, 9), size * 1.5, angle, centre)},
                    {0.3 * colour.r + 0.25, 0.3 * colour.g + 0.25, 0.3 * colour.b + 0.25});
    } else {  // storage tank
      Polygon circle;
      const double r = uniform(rng, 5, 12);
      for (int k = 0; k < 16; ++k) {
        const double t = 2 * std::numbers::pi * k / 16;
        circle.push_back({centre.x + r * std::cos(t), centre.y + r * std::sin(t)});
      }
      fill_polygons(image, {circle}, colour);
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  require(image_size >= 64, "synthetic image size must be at least 64");
  require(count >= 0, "synthetic count must be non-negative");
  require(min_planes >= 0 && max_planes >= min_planes, "invalid plane count range");
  require(min_span > 4 && max_span >= min_span && max_span < image_size,
          "invalid plane span range");
  require(cell > 0, "grid cell must be positive");
  require(0.0 <= min_tone && min_tone <= max_tone && max_tone <= 1.0, "invalid plane tone range");
  require(shadow_level >= 0.0 && shadow_level <= 1.0, "shadow level must lie in [0, 1]");
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  Dataset dataset;
  const int size = config.image_size;
  for (int index = 0; index < config.count; ++index) {
    Rng rng = make_rng(config.seed, {0x5ce2e, static_cast<std::uint64_t>(index)});
    Sample sample;
    sample.id = config.id_prefix + "_" + std::to_string(index);
    sample.source_id = sample.id;
    sample.image = Image(3, size, size);
    paint_ground(sample.image, rng);
    paint_clutter(sample.image, rng, config.max_clutter);

    const int planes =
        config.min_planes + static_cast<int>(rng() % (config.max_planes - config.min_planes + 1));
    std::vector<Box> placed;
    std::vector<std::pair<int, int>> used_cells;
    for (int p = 0, attempts = 0; p < planes && attempts < 200; ++attempts) {
      const double span = uniform(rng, config.min_span, config.max_span);
      const double length = span * uniform(rng, 0.85, 1.1);
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const bool swept = (rng() & 1) != 0;
      const double body = uniform(rng, 0.09, 0.13) * (span / length);
      const auto unit = plane_parts(swept, span / length, body);

      std::vector<Polygon> rotated;
      for (const auto& part : unit) rotated.push_back(transform_polygon(part, length, length, angle, {0, 0}));
      double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
      for (const auto& part : rotated) {
        for (const Vec2& v : part) {
          x0 = std::min(x0, v.x);
          y0 = std::min(y0, v.y);
          x1 = std::max(x1, v.x);
          y1 = std::max(y1, v.y);
        }
      }
      const double cx = uniform(rng, -x0 + 1.0, size - x1 - 1.0);
      const double cy = uniform(rng, -y0 + 1.0, size - y1 - 1.0);
      const Box box = Box::from_corners(cx + x0, cy + y0, cx + x1, cy + y1);
      const std::pair<int, int> cell{static_cast<int>(box.cx) / config.cell,
                                     static_cast<int>(box.cy) / config.cell};
      bool clash = std::find(used_cells.begin(), used_cells.end(), cell) != used_cells.end();
      for (const Box& other : placed) clash = clash || intersection_area(box, other) > 0.0;
      if (clash) continue;

      std::vector<Polygon> shifted;
      for (const auto& part : unit) shifted.push_back(transform_polygon(part, length, length, angle, {cx, cy}));
      const double tone = uniform(rng, config.min_tone, config.max_tone);
      const Colour colour{tone * uniform(rng, 0.95, 1.02), tone * uniform(rng, 0.95, 1.02),
                          tone * uniform(rng, 0.97, 1.05)};
      // Soft shadow offset towards the lower right.
      std::vector<Polygon> shadow;
      for (const auto& part : unit) {
        shadow.push_back(transform_polygon(part, length, length, angle, {cx + 3.0, cy + 3.0}));
      }
      fill_polygons(sample.image, shadow,
                    {config.shadow_level, config.shadow_level, config.shadow_level});
      fill_polygons(sample.image, shifted, colour, 0.25,
                    {std::cos(angle + 0.7), std::sin(angle + 0.7)});

      placed.push_back(box);
      used_cells.push_back(cell);
      sample.annotations.push_back({sample.id, 0, box});
      ++p;
    }
    quantize_8bit(sample.image);
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace camo
