#include "camo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "camo/error.hpp"

namespace camo {

std::string to_string(PlacementMode mode) {
  switch (mode) {
    case PlacementMode::OnTopCenter:
      return "on-top";
    case PlacementMode::SideOffset:
      return "side";
    case PlacementMode::TwoOnTop:
      return "two-on-top";
  }
  return "unknown";
}

PlacementMode parse_placement(const std::string& text) {
  if (text == "on-top" || text == "OnTopCenter") return PlacementMode::OnTopCenter;
  if (text == "side" || text == "SideOffset") return PlacementMode::SideOffset;
  if (text == "two-on-top" || text == "TwoOnTop") return PlacementMode::TwoOnTop;
  throw InvalidArgument("unknown placement mode '" + text + "'");
}

PatchConfig PatchConfig::make(double rel_width, double rel_height, PlacementMode placement) {
  PatchConfig config;
  config.rel_width = rel_width;
  config.rel_height = rel_height;
  config.placement = placement;
  config.count = placement == PlacementMode::TwoOnTop ? 2 : 1;
  config.validate();
  return config;
}

void PatchConfig::validate() const {
  require(rel_width > 0.0 && rel_width <= 1.0, "rel_width must lie in (0, 1]");
  require(rel_height > 0.0 && rel_height <= 1.0, "rel_height must lie in (0, 1]");
  require(count == 1 || count == 2, "patch count must be 1 or 2");
  require((count == 2) == (placement == PlacementMode::TwoOnTop),
          "count must be 2 exactly when placement is two-on-top");
  require(side_gap >= 0.0, "side_gap must be non-negative");
}

std::string PatchConfig::id() const {
  std::ostringstream os;
  os << rel_width << 'x' << rel_height << '-' << to_string(placement);
  return os.str();
}

void Patch::validate() const {
  require(pixels.channels() == 3, "patch must have 3 channels");
  require(pixels.height() >= 2 && pixels.width() >= 2, "patch must be at least 2x2");
  for (double v : pixels.data()) {
    require(v >= 0.0 && v <= 1.0, "patch pixels must lie in [0, 1]");
  }
}

Patch random_patch(int height, int width, std::uint64_t seed) {
  require(height >= 2 && width >= 2, "patch must be at least 2x2");
  Patch patch{Image(3, height, width), {}};
  Rng rng = make_rng(seed, {0x9a7c4});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& v : patch.pixels.data()) v = unit(rng);
  patch.meta.seed = seed;
  return patch;
}

namespace {

void check_range(const Range& r, const char* name) {
  require(r.min <= r.max, std::string("transform range '") + name + "' has min > max");
}

}  // namespace

void TransformRanges::validate() const {
  check_range(scale, "scale");
  check_range(noise, "noise");
  check_range(contrast, "contrast");
  check_range(brightness, "brightness");
  require(scale.min > 0.0, "scale jitter must be positive");
  require(noise.min >= 0.0, "noise amplitude must be non-negative");
  require(contrast.min >= 0.0, "contrast must be non-negative");
}

TransformSample sample_transform(Rng& rng, const TransformRanges& ranges) {
  ranges.validate();
  TransformSample s;
  s.angle_deg = uniform(rng, 0.0, 360.0);
  s.scale = uniform(rng, ranges.scale.min, ranges.scale.max);
  s.noise_amplitude = uniform(rng, ranges.noise.min, ranges.noise.max);
  s.contrast = uniform(rng, ranges.contrast.min, ranges.contrast.max);
  s.brightness = uniform(rng, ranges.brightness.min, ranges.brightness.max);
  s.noise_seed = rng();
  return s;
}

std::vector<Placement> patch_placements(const Annotation& annotation, const PatchConfig& config) {
  config.validate();
  const Box& b = annotation.box;
  require(b.w > 0.0 && b.h > 0.0, "annotation box must have positive width and height");
  const double tw = config.rel_width * b.w;
  const double th = config.rel_height * b.h;
  switch (config.placement) {
    case PlacementMode::OnTopCenter:
      return {{b.cx, b.cy, tw, th}};
    case PlacementMode::SideOffset: {
      const double offset = (0.5 + 0.5 * config.rel_width + config.side_gap) * b.w;
      return {{b.cx + offset, b.cy, tw, th}};
    }
    case PlacementMode::TwoOnTop:
      return {{b.cx - 0.25 * b.w, b.cy, tw, th}, {b.cx + 0.25 * b.w, b.cy, tw, th}};
  }
  return {};
}

CompositeTrace composite_patch_inplace(Image& image, const Image& patch,
                                       const Placement& placement,
                                       const TransformSample& transform) {
  require(image.channels() == 3 && patch.channels() == 3, "composite needs RGB image and patch");
  require(placement.width > 0.0 && placement.height > 0.0, "placement must have positive size");
  require(transform.scale > 0.0, "transform scale must be positive");

  CompositeTrace trace;
  trace.patch_height = patch.height();
  trace.patch_width = patch.width();

  const double tw = placement.width * transform.scale;
  const double th = placement.height * transform.scale;
  const double rad = transform.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);

  // Axis-aligned bound of the rotated rectangle.
  const double ex = 0.5 * (std::abs(cs) * tw + std::abs(sn) * th);
  const double ey = 0.5 * (std::abs(sn) * tw + std::abs(cs) * th);
  const int x_begin = std::max(0, static_cast<int>(std::floor(placement.cx - ex)));
  const int x_end = std::min(image.width(), static_cast<int>(std::ceil(placement.cx + ex)) + 1);
  const int y_begin = std::max(0, static_cast<int>(std::floor(placement.cy - ey)));
  const int y_end = std::min(image.height(), static_cast<int>(std::ceil(placement.cy + ey)) + 1);
  if (x_begin >= x_end || y_begin >= y_end) {
    trace.outside = true;
    trace.warning = "placement lies fully outside the image; image left unchanged";
    return trace;
  }

  const int pw = patch.width();
  const int ph = patch.height();
  const std::size_t plane = image.plane_size();
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = x_begin; x < x_end; ++x) {
      const double dx = x + 0.5 - placement.cx;
      const double dy = y + 0.5 - placement.cy;
      // Inverse rotation into the patch frame.
      const double px = cs * dx + sn * dy;
      const double py = -sn * dx + cs * dy;
      const double u = (px / tw + 0.5) * pw - 0.5;
      const double v = (py / th + 0.5) * ph - 0.5;
      if (u < -0.5 || u >= pw - 0.5 || v < -0.5 || v >= ph - 0.5) continue;

      const int u0 = static_cast<int>(std::floor(u));
      const int v0 = static_cast<int>(std::floor(v));
      const double fu = u - u0;
      const double fv = v - v0;
      const int ua = std::clamp(u0, 0, pw - 1);
      const int ub = std::clamp(u0 + 1, 0, pw - 1);
      const int va = std::clamp(v0, 0, ph - 1);
      const int vb = std::clamp(v0 + 1, 0, ph - 1);

      FootprintSample s;
      s.pixel = y * image.width() + x;
      s.taps = {va * pw + ua, va * pw + ub, vb * pw + ua, vb * pw + ub};
      s.weights = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
      for (int c = 0; c < 3; ++c) {
        const auto src = patch.plane(c);
        double sample = 0.0;
        for (int k = 0; k < 4; ++k) sample += s.weights[k] * src[s.taps[k]];
        double value = transform.contrast * sample + transform.brightness;
        if (transform.noise_amplitude > 0.0) {
          const std::uint64_t key =
              transform.noise_seed ^ mix64((static_cast<std::uint64_t>(s.pixel) << 2) | c);
          value += transform.noise_amplitude * (2.0 * hash_uniform(key) - 1.0);
        }
        if (value <= 0.0) {
          value = 0.0;
          s.gain[c] = 0.0;
        } else if (value >= 1.0) {
          value = 1.0;
          s.gain[c] = 0.0;
        } else {
          s.gain[c] = transform.contrast;
        }
        image.data()[c * plane + s.pixel] = value;
      }
      trace.samples.push_back(s);
    }
  }
  if (trace.samples.empty()) {
    trace.outside = true;
    trace.warning = "placement covers no image pixel; image left unchanged";
  }
  return trace;
}

Image composite_patch(const Image& image, const Patch& patch, const Placement& placement,
                      const TransformSample& transform) {
  Image out = image;
  composite_patch_inplace(out, patch.pixels, placement, transform);
  return out;
}

void backprop_to_patch(std::span<const CompositeTrace> traces, const Image& image_grad,
                       Image& patch_grad) {
  if (traces.empty()) return;
  require(image_grad.channels() == 3, "image gradient must have 3 channels");
  const int ph = traces.front().patch_height;
  const int pw = traces.front().patch_width;
  if (patch_grad.empty()) patch_grad = Image(3, ph, pw);
  require(patch_grad.height() == ph && patch_grad.width() == pw && patch_grad.channels() == 3,
          "patch gradient shape mismatch");

  // Later composites overwrite earlier ones, so walk backwards and consume
  // each pixel's gradient once.
  Image remaining = image_grad;
  const std::size_t plane = remaining.plane_size();
  const std::size_t patch_plane = patch_grad.plane_size();
  auto rg = remaining.data();
  auto pg = patch_grad.data();
  for (auto it = traces.rbegin(); it != traces.rend(); ++it) {
    require(it->patch_height == ph && it->patch_width == pw, "traces refer to different patches");
    for (const FootprintSample& s : it->samples) {
      for (int c = 0; c < 3; ++c) {
        const double g = rg[c * plane + s.pixel] * s.gain[c];
        rg[c * plane + s.pixel] = 0.0;
        if (g == 0.0) continue;
        for (int k = 0; k < 4; ++k) pg[c * patch_plane + s.taps[k]] += g * s.weights[k];
      }
    }
  }
}

}  // namespace camo
