#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "camo/error.hpp"
#include "camo/geometry.hpp"
#include "test_util.hpp"

namespace camo {
namespace {

using testing::random_image;

TEST(PatchConfig, CountFollowsPlacement) {
  EXPECT_EQ(PatchConfig::small().count, 1);
  EXPECT_EQ(PatchConfig::two_small().count, 2);
  PatchConfig bad = PatchConfig::small();
  bad.count = 2;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_THROW(PatchConfig::make(0.0, 0.1, PlacementMode::OnTopCenter).validate(), InvalidArgument);
  EXPECT_THROW(PatchConfig::make(1.2, 0.1, PlacementMode::OnTopCenter).validate(), InvalidArgument);
  EXPECT_EQ(PatchConfig::small().id(), "0.1x0.1-on-top");
}

TEST(Patch, ValidateRejectsTinyOrOutOfRange) {
  Patch p = random_patch(4, 4, 1);
  EXPECT_NO_THROW(p.validate());
  p.pixels.at(0, 0, 0) = 1.5;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_THROW(random_patch(1, 4, 1), InvalidArgument);
}

TEST(SampleTransform, FrozenRangesGiveIdentityJitter) {
  Rng rng(5);
  const TransformSample t = sample_transform(rng, TransformRanges::identity());
  EXPECT_GE(t.angle_deg, 0.0);
  EXPECT_LT(t.angle_deg, 360.0);
  EXPECT_EQ(t.scale, 1.0);
  EXPECT_EQ(t.noise_amplitude, 0.0);
  EXPECT_EQ(t.contrast, 1.0);
  EXPECT_EQ(t.brightness, 0.0);
}

TEST(SampleTransform, SameSeedSameSample) {
  Rng a(42), b(42);
  EXPECT_EQ(sample_transform(a, {}), sample_transform(b, {}));
}

TEST(SampleTransform, InvalidRangeRejected) {
  Rng rng(1);
  TransformRanges r;
  r.contrast = {1.2, 0.8};
  EXPECT_THROW(sample_transform(rng, r), InvalidArgument);
}

TEST(SampleTransform, FieldsStayInsideRanges) {
  Rng rng(9);
  const TransformRanges r;
  for (int i = 0; i < 2000; ++i) {
    const auto t = sample_transform(rng, r);
    EXPECT_GE(t.scale, r.scale.min);
    EXPECT_LE(t.scale, r.scale.max);
    EXPECT_GE(t.noise_amplitude, r.noise.min);
    EXPECT_LE(t.noise_amplitude, r.noise.max);
    EXPECT_GE(t.contrast, r.contrast.min);
    EXPECT_LE(t.contrast, r.contrast.max);
    EXPECT_GE(t.brightness, r.brightness.min);
    EXPECT_LE(t.brightness, r.brightness.max);
  }
}

TEST(SampleTransform, AnglesUniformByChiSquared) {
  Rng rng(2024);
  std::vector<int> bins(8, 0);
  for (int i = 0; i < 10000; ++i) {
    const double a = sample_transform(rng, {}).angle_deg;
    ASSERT_GE(a, 0.0);
    ASSERT_LT(a, 360.0);
    ++bins[static_cast<int>(a / 45.0)];
  }
  EXPECT_LT(testing::chi_squared_uniform(bins), testing::kChi2Crit7);
}

TEST(PatchPlacements, OnTopCentre) {
  const Annotation a{"i", 0, {100, 100, 100, 100}};
  const auto p = patch_placements(a, PatchConfig::small());
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (Placement{100, 100, 10, 10}));
}

TEST(PatchPlacements, TwoOnTop) {
  const Annotation a{"i", 0, {100, 100, 100, 100}};
  const auto p = patch_placements(a, PatchConfig::two_small());
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0].cx, 75.0);
  EXPECT_DOUBLE_EQ(p[1].cx, 125.0);
  for (const auto& q : p) {
    EXPECT_DOUBLE_EQ(q.cy, 100.0);
    EXPECT_DOUBLE_EQ(q.width, 7.5);
    EXPECT_DOUBLE_EQ(q.height, 7.5);
  }
}

TEST(PatchPlacements, SideOffsetClearsTheBox) {
  const Annotation a{"i", 0, {100, 100, 100, 100}};
  const auto p = patch_placements(a, PatchConfig::large_side());
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].cx, 165.0, 1e-12);
  EXPECT_DOUBLE_EQ(p[0].cy, 100.0);
  EXPECT_DOUBLE_EQ(p[0].width, 20.0);
  EXPECT_GT(p[0].cx - 0.5 * p[0].width, a.box.right());
}

TEST(PatchPlacements, Deterministic) {
  const Annotation a{"i", 0, {37.5, 81.25, 40, 22}};
  for (const auto& c : {PatchConfig::small(), PatchConfig::large_side(), PatchConfig::two_small()})
    EXPECT_EQ(patch_placements(a, c), patch_placements(a, c));
}

TEST(Composite, IdentityGrayBlock) {
  Rng rng(1);
  const Image img = random_image(3, 64, 64, rng);
  Patch gray{Image(3, 4, 4, 0.5), {}};
  const Image out = composite_patch(img, gray, {32, 32, 10, 10}, TransformSample::identity());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const bool inside = x >= 27 && x < 37 && y >= 27 && y < 37;
        if (inside) {
          EXPECT_NEAR(out.at(c, y, x), 0.5, 1e-12) << x << "," << y;
        } else {
          EXPECT_EQ(out.at(c, y, x), img.at(c, y, x)) << x << "," << y;
        }
      }
    }
  }
}

TEST(Composite, QuarterTurnMovesMarkedCorner) {
  Patch p{Image(3, 8, 8, 0.0), {}};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) p.pixels.at(c, y, x) = 1.0;
  const Image bg(3, 64, 64, 0.5);
  auto marked_quadrant = [](const Image& out) {
    // Returns bit mask of quadrants (TL=1, TR=2, BL=4, BR=8) holding white.
    int mask = 0;
    for (int y = 16; y < 48; ++y)
      for (int x = 16; x < 48; ++x)
        if (out.at(0, y, x) > 0.9) mask |= 1 << ((y < 32 ? 0 : 2) + (x < 32 ? 0 : 1));
    return mask;
  };
  EXPECT_EQ(marked_quadrant(composite_patch(bg, p, {32, 32, 32, 32}, TransformSample::identity(0))), 1);
  EXPECT_EQ(marked_quadrant(composite_patch(bg, p, {32, 32, 32, 32}, TransformSample::identity(90))), 2);
  EXPECT_EQ(marked_quadrant(composite_patch(bg, p, {32, 32, 32, 32}, TransformSample::identity(180))), 8);
}

TEST(Composite, NeverWritesOutsideFootprintAndStaysInRange) {
  Rng rng(77);
  TransformRanges wild;
  wild.brightness = {-0.8, 0.8};
  wild.contrast = {0.2, 3.0};
  wild.noise = {0.0, 0.5};
  wild.scale = {0.5, 1.5};
  for (int trial = 0; trial < 50; ++trial) {
    Image img = random_image(3, 48, 48, rng);
    const Image before = img;
    const Image patch = random_image(3, 6, 5, rng);
    const Placement pl{uniform(rng, -5, 53), uniform(rng, -5, 53), uniform(rng, 3, 20),
                       uniform(rng, 3, 20)};
    const auto t = sample_transform(rng, wild);
    const auto trace = composite_patch_inplace(img, patch, pl, t);
    std::set<int> written;
    for (const auto& s : trace.samples) written.insert(s.pixel);
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 48; ++x) {
        for (int c = 0; c < 3; ++c) {
          EXPECT_GE(img.at(c, y, x), 0.0);
          EXPECT_LE(img.at(c, y, x), 1.0);
          if (!written.count(y * 48 + x)) EXPECT_EQ(img.at(c, y, x), before.at(c, y, x));
        }
      }
    }
  }
}

TEST(Composite, PlacementOutsideImageLeavesItUnchanged) {
  Rng rng(4);
  Image img = random_image(3, 32, 32, rng);
  const Image before = img;
  const auto trace =
      composite_patch_inplace(img, random_image(3, 4, 4, rng), {200, 200, 10, 10}, TransformSample::identity());
  EXPECT_TRUE(trace.outside);
  EXPECT_FALSE(trace.warning.empty());
  EXPECT_EQ(img, before);
}

TEST(Composite, EdgePlacementIsClipped) {
  Rng rng(4);
  Image img = random_image(3, 32, 32, rng);
  const auto trace =
      composite_patch_inplace(img, Image(3, 4, 4, 0.5), {0, 16, 10, 10}, TransformSample::identity());
  EXPECT_FALSE(trace.outside);
  EXPECT_EQ(trace.samples.size(), 5u * 10u);
}

TEST(Composite, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const Image img = random_image(3, 40, 40, rng);
  const Image weights = random_image(3, 40, 40, rng, -1.0, 1.0);
  // Mid-range pixels and mild jitter keep every value clear of the clamp.
  const Image patch = random_image(3, 8, 8, rng, 0.3, 0.7);
  for (double angle : {0.0, 33.0, 90.0, 211.0}) {
    const Placement pl{19.3, 21.7, 17.0, 13.0};
    const TransformSample t{angle, 1.07, 0.05, 1.1, -0.03, 99};
    auto loss = [&](const Image& p) {
      Image out = img;
      composite_patch_inplace(out, p, pl, t);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += weights.data()[i] * out.data()[i];
      return s;
    };
    Image out = img;
    const auto trace = composite_patch_inplace(out, patch, pl, t);
    Image grad(3, 8, 8, 0.0);
    backprop_to_patch(std::span<const CompositeTrace>(&trace, 1), weights, grad);
    const auto numeric = testing::numeric_gradient(loss, patch);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, testing::relative_error(grad.data()[i], numeric[i]));
    EXPECT_LT(worst, 1e-3) << "angle " << angle;
  }
}

TEST(Composite, SumGradientMatchesFiniteDifferences) {
  Rng rng(12);
  const Image img = random_image(3, 32, 32, rng);
  const Image patch = random_image(3, 8, 8, rng, 0.25, 0.75);
  const Placement pl{16, 16, 12, 12};
  const TransformSample t{47.0, 1.0, 0.0, 1.0, 0.0, 0};
  auto loss = [&](const Image& p) {
    Image out = img;
    composite_patch_inplace(out, p, pl, t);
    double s = 0.0;
    for (double v : out.data()) s += v;
    return s;
  };
  Image out = img;
  const auto trace = composite_patch_inplace(out, patch, pl, t);
  Image grad(3, 8, 8, 0.0);
  backprop_to_patch(std::span<const CompositeTrace>(&trace, 1), Image(3, 32, 32, 1.0), grad);
  const auto numeric = testing::numeric_gradient(loss, patch);
  for (std::size_t i = 0; i < numeric.size(); ++i)
    EXPECT_LT(testing::relative_error(grad.data()[i], numeric[i]), 1e-3);
}

TEST(Composite, OverlappingWritesRouteGradientToLastWriter) {
  Image img(3, 20, 20, 0.2);
  const Image first(3, 4, 4, 0.9);
  const Image second(3, 4, 4, 0.1);
  std::vector<CompositeTrace> traces;
  traces.push_back(composite_patch_inplace(img, first, {10, 10, 8, 8}, TransformSample::identity()));
  traces.push_back(composite_patch_inplace(img, second, {10, 10, 8, 8}, TransformSample::identity()));
  Image g_second(3, 4, 4, 0.0);
  Image shared(3, 4, 4, 0.0);
  backprop_to_patch(traces, Image(3, 20, 20, 1.0), shared);
  backprop_to_patch(std::span<const CompositeTrace>(&traces[1], 1), Image(3, 20, 20, 1.0), g_second);
  EXPECT_EQ(shared, g_second);
}

TEST(PatchIo, RoundTripWithinOneLevel) {
  Patch p = random_patch(7, 9, 3);
  p.meta.config = PatchConfig::two_small();
  p.meta.run_id = "run-x";
  p.meta.epoch = 12;
  p.meta.attributes["alpha"] = "0.01";
  const auto path = std::filesystem::temp_directory_path() / "camo_patch_rt" / "p.png";
  save_patch(path, p);
  EXPECT_TRUE(std::filesystem::exists(patch_sidecar_path(path)));
  const Patch back = load_patch(path);
  ASSERT_TRUE(back.pixels.same_shape(p.pixels));
  for (std::size_t i = 0; i < p.pixels.size(); ++i)
    EXPECT_LE(std::abs(back.pixels.data()[i] - p.pixels.data()[i]), 1.0 / 255.0);
  EXPECT_EQ(back.meta.config, p.meta.config);
  EXPECT_EQ(back.meta.run_id, "run-x");
  EXPECT_EQ(back.meta.epoch, 12);
  EXPECT_EQ(back.meta.seed, 3u);
  EXPECT_EQ(back.meta.attributes.at("alpha"), "0.01");
  std::filesystem::remove_all(path.parent_path());
}

}  // namespace
}  // namespace camo
