#include <gtest/gtest.h>

#include <filesystem>

#include "camo/error.hpp"
#include "camo/image.hpp"
#include "camo/plot.hpp"
#include "camo/png_io.hpp"

namespace camo {
namespace {

std::vector<EvalReport> three_reports() {
  std::vector<EvalReport> r(3);
  r[0].condition = Condition::Clean;
  r[0].pr_points = {{1.0, 0.5, 0.9}, {1.0, 1.0, 0.5}};
  r[0].ap = 1.0;
  r[1].condition = Condition::Noise;
  r[1].pr_points = {{1.0, 0.4, 0.9}, {0.8, 0.8, 0.3}};
  r[1].ap = 0.72;
  r[2].condition = Condition::Patch;
  r[2].pr_points = {{0.5, 0.1, 0.9}, {0.3, 0.3, 0.2}};
  r[2].ap = 0.09;
  return r;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Plot, SvgHasOneCurvePerReportAndLegend) {
  const auto reports = three_reports();
  const std::string svg = render_pr_svg(reports, "test");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("CLEAN"), std::string::npos);
  EXPECT_NE(svg.find("NOISE"), std::string::npos);
  EXPECT_NE(svg.find("PATCH"), std::string::npos);
  EXPECT_NE(svg.find("72.0"), std::string::npos);
  EXPECT_EQ(svg, render_pr_svg(reports, "test"));
}

TEST(Plot, RasterIsDeterministicAndNotBlank) {
  const auto reports = three_reports();
  const Image a = render_pr_image(reports, 320, 240), b = render_pr_image(reports, 320, 240);
  EXPECT_EQ(a.width(), 320);
  EXPECT_EQ(a.height(), 240);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  std::size_t non_white = 0;
  for (double v : a.data()) non_white += v < 0.99;
  EXPECT_GT(non_white, 1000u);
}

TEST(Plot, SavesByExtension) {
  const auto dir = std::filesystem::temp_directory_path() / "camo_plot";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto reports = three_reports();
  save_pr_plot(dir / "pr.svg", reports);
  save_pr_plot(dir / "pr.png", reports);
  EXPECT_GT(std::filesystem::file_size(dir / "pr.svg"), 0u);
  EXPECT_EQ(read_png(dir / "pr.png").width(), 640);
  EXPECT_THROW(save_pr_plot(dir / "pr.gif", reports), InvalidArgument);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace camo
