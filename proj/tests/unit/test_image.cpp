#include <gtest/gtest.h>

#include <filesystem>

#include "camo/box.hpp"
#include "camo/error.hpp"
#include "camo/image.hpp"
#include "camo/png_io.hpp"
#include "test_util.hpp"

namespace camo {
namespace {

TEST(Image, ConstructFillAndIndex) {
  Image img(3, 4, 5, 0.25);
  EXPECT_EQ(img.size(), 60u);
  img.at(2, 3, 4) = 0.75;
  EXPECT_DOUBLE_EQ(img.plane(2)[3 * 5 + 4], 0.75);
  img.fill(1.0);
  for (double v : img.data()) EXPECT_EQ(v, 1.0);
}

TEST(Image, QuantizeRoundsToByteGrid) {
  Image img(1, 1, 3);
  img.at(0, 0, 0) = 0.5;
  img.at(0, 0, 1) = -0.2;
  img.at(0, 0, 2) = 1.3;
  quantize_8bit(img);
  EXPECT_DOUBLE_EQ(img.at(0, 0, 0), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(img.at(0, 0, 2), 1.0);
}

TEST(Image, CropPadsOutsideSource) {
  Image img(1, 2, 2, 0.5);
  const Image c = crop(img, 1, 1, 3, 3, 0.0);
  EXPECT_EQ(c.width(), 3);
  EXPECT_DOUBLE_EQ(c.at(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.at(0, 1, 1), 0.0);
}

TEST(Image, ResizeConstantStaysConstant) {
  Image img(3, 10, 7, 0.3);
  const Image r = resize_bilinear(img, 13, 5);
  for (double v : r.data()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Box, IouOfIdenticalAndDisjoint) {
  const Box a{10, 10, 4, 4};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, Box{30, 30, 4, 4}), 0.0);
  EXPECT_NEAR(iou(a, Box{12, 10, 4, 4}), 8.0 / 24.0, 1e-12);
}

TEST(Box, ValidateAnnotation) {
  EXPECT_NO_THROW(validate_annotation({"a", 0, {5, 5, 2, 2}}, 10, 10));
  EXPECT_THROW(validate_annotation({"a", 0, {5, 5, 0, 2}}, 10, 10), InvalidArgument);
  EXPECT_THROW(validate_annotation({"a", 0, {50, 5, 2, 2}}, 10, 10), InvalidArgument);
}

TEST(Png, RoundTripWithinOneLevel) {
  Rng rng(3);
  const Image img = testing::random_image(3, 9, 11, rng);
  const auto path = std::filesystem::temp_directory_path() / "camo_png_roundtrip.png";
  write_png(path, img);
  const Image back = read_png(path);
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_LE(std::abs(back.data()[i] - img.data()[i]), 0.5 / 255.0 + 1e-12);
  std::filesystem::remove(path);
}

TEST(Png, MissingFileThrowsIoError) {
  EXPECT_THROW(read_png("/nonexistent/definitely.png"), IoError);
}

TEST(Rng, DeriveSeedDependsOnPathOrder) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}

}  // namespace
}  // namespace camo
