#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "camo/error.hpp"
#include "camo/synth.hpp"

namespace camo {
namespace {

TEST(Synth, DeterministicForSeed) {
  SynthConfig c;
  c.count = 4;
  const Dataset a = generate_synthetic(c), b = generate_synthetic(c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].id, b.samples[i].id);
    EXPECT_EQ(a.samples[i].annotations, b.samples[i].annotations);
    EXPECT_TRUE(std::equal(a.samples[i].image.data().begin(), a.samples[i].image.data().end(),
                           b.samples[i].image.data().begin()));
  }
  c.seed = 2;
  EXPECT_NE(generate_synthetic(c).samples[0].annotations, a.samples[0].annotations);
}

TEST(Synth, LargerCountSharesPrefix) {
  SynthConfig c;
  c.count = 2;
  const Dataset small = generate_synthetic(c);
  c.count = 5;
  const Dataset large = generate_synthetic(c);
  ASSERT_EQ(large.size(), 5u);
  for (std::size_t i = 0; i < small.size(); ++i)
    EXPECT_EQ(small.samples[i].annotations, large.samples[i].annotations);
}

TEST(Synth, PlanesLieInsideImageInDistinctCells) {
  SynthConfig c;
  c.count = 40;
  c.seed = 9;
  for (const Sample& s : generate_synthetic(c).samples) {
    EXPECT_GE(s.annotations.size(), std::size_t(c.min_planes));
    EXPECT_LE(s.annotations.size(), std::size_t(c.max_planes));
    EXPECT_EQ(s.image.width(), c.image_size);
    std::set<std::pair<int, int>> cells;
    for (const Annotation& a : s.annotations) {
      EXPECT_EQ(a.class_id, 0);
      EXPECT_EQ(a.image_id, s.id);
      EXPECT_GE(a.box.left(), 0.0);
      EXPECT_GE(a.box.top(), 0.0);
      EXPECT_LE(a.box.right(), c.image_size);
      EXPECT_LE(a.box.bottom(), c.image_size);
      // The rotated sprite's envelope can exceed the wingspan, but not
      // by more than the diagonal of a span-sized square.
      EXPECT_LE(std::max(a.box.w, a.box.h), c.max_span * std::sqrt(2.0));
      EXPECT_GE(std::max(a.box.w, a.box.h), 0.5 * c.min_span);
      const auto cell = std::make_pair(int(std::floor(a.box.cx / c.cell)),
                                       int(std::floor(a.box.cy / c.cell)));
      EXPECT_TRUE(cells.insert(cell).second);
    }
    for (double v : s.image.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c;
  c.min_planes = 4;
  c.max_planes = 2;
  EXPECT_THROW(generate_synthetic(c), InvalidArgument);
  c = {};
  c.min_tone = 0.9;
  c.max_tone = 0.5;
  EXPECT_THROW(generate_synthetic(c), InvalidArgument);
  c = {};
  c.count = 0;
  EXPECT_TRUE(generate_synthetic(c).empty());
}

}  // namespace
}  // namespace camo
