#include <gtest/gtest.h>

#include "evcrowd/groundtruth.hpp"
#include "evcrowd/synth.hpp"
#include "oracles.hpp"

using namespace evcrowd;

namespace {

HeadAnnotations scene(std::size_t w, std::size_t h, std::vector<HeadPoint> pts) {
  HeadAnnotations a;
  a.width = w;
  a.height = h;
  a.points = std::move(pts);
  return a;
}

}  // namespace

TEST(GroundTruth, SingleHeadIntegratesToOne) {
  auto m = build_density_map(scene(64, 64, {{32.0, 32.0}}), GaussianSpec{3.0, 4.0});
  EXPECT_NEAR(m.sum(), 1.0, 1e-6);
  auto mo = oracle::moments(m);
  EXPECT_NEAR(mo.mean_x, 32.0, 1e-9);
  EXPECT_NEAR(mo.mean_y, 32.0, 1e-9);
}

TEST(GroundTruth, MassIsAdditive) {
  auto m = build_density_map(scene(80, 60, {{10.3, 50.7}, {70.1, 5.5}}), GaussianSpec{});
  EXPECT_NEAR(m.sum(), 2.0, 1e-6);
}

TEST(GroundTruth, PerspectiveScalesBandwidth) {
  auto a = scene(128, 128, {{64.0, 64.0}});
  a.perspective = PerspectiveProfile({0, 128}, {0.0 + 1.0, 3.0});  // scale 2 at row 64
  ASSERT_DOUBLE_EQ(a.perspective.scale_at(64.0), 2.0);
  const double sigma0 = 3.0;
  auto m = build_density_map(a, GaussianSpec{sigma0, 4.0});
  auto mo = oracle::moments(m);
  const double want = (2 * sigma0) * (2 * sigma0);
  EXPECT_NEAR(mo.var_x / want, 1.0, 0.02);
  EXPECT_NEAR(mo.var_y / want, 1.0, 0.02);
  EXPECT_NEAR(m.sum(), 1.0, 1e-6);
}

TEST(GroundTruth, BorderHeadsAreClippedAndRenormalized) {
  GroundTruthReport report;
  auto m = build_density_map(scene(20, 20, {{0.2, 0.2}, {19.9, 10.0}, {10, 10}}),
                             GaussianSpec{6.0, 4.0}, &report);
  EXPECT_NEAR(m.sum(), 3.0, 1e-6);
  EXPECT_EQ(report.clipped_kernels, 3u);
}

TEST(GroundTruth, TinyKernelFallsBackToHostPixel) {
  auto m = build_density_map(scene(8, 8, {{3.9, 2.1}}), GaussianSpec{0.01, 3.0});
  EXPECT_NEAR(m.sum(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.at(2, 3), 1.0);
}

TEST(GroundTruth, MassConservedUnderAnyPerspective) {
  auto a = generate_scene(200, 150, 40, 6.0, 3);
  for (auto profile : {PerspectiveProfile(), PerspectiveProfile({0, 149}, {0.3, 3.5}),
                       PerspectiveProfile({20, 60, 120}, {4.0, 1.0, 0.5})}) {
    a.perspective = profile;
    auto m = build_density_map(a, GaussianSpec{3.0, 3.0});
    EXPECT_NEAR(m.sum() / 40.0, 1.0, 1e-6);
    for (double v : m.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(GroundTruth, IntegerShiftTranslatesMap) {
  auto a = scene(64, 64, {{20.3, 18.6}, {30.0, 25.25}});
  auto b = scene(64, 64, {{25.3, 21.6}, {35.0, 28.25}});
  auto ma = build_density_map(a, GaussianSpec{});
  auto mb = build_density_map(b, GaussianSpec{});
  for (std::size_t r = 0; r + 3 < 64; ++r) {
    for (std::size_t c = 0; c + 5 < 64; ++c) EXPECT_NEAR(mb.at(r + 3, c + 5), ma.at(r, c), 1e-15);
  }
}

TEST(GroundTruth, RejectsBadSpec) {
  auto a = scene(8, 8, {});
  EXPECT_THROW(build_density_map(a, GaussianSpec{0.0, 4.0}), ParameterError);
  EXPECT_THROW(build_density_map(a, GaussianSpec{3.0, 2.5}), ParameterError);
}

TEST(RegionCount, SumsOverRectangle) {
  auto a = generate_scene(100, 100, 5, 20.0, 1);
  auto gt = build_density_map(a, GaussianSpec{});
  EXPECT_NEAR(region_count(gt, Rect{0, 0, 100, 100}), 5.0, 1e-6);

  auto one = build_density_map(scene(100, 100, {{10, 10}}), GaussianSpec{});
  EXPECT_NEAR(region_count(one, Rect{60, 60, 30, 30}), 0.0, 1e-9);
  EXPECT_THROW(region_count(one, Rect{90, 0, 20, 10}), BoundsError);
  EXPECT_THROW(region_count(one, Rect{0, 0, 0, 10}), BoundsError);
}

TEST(RegionCount, PartialRegionsGiveFractionalCounts) {
  // Smoothed heads straddling a region boundary give non-integer counts.
  auto gt = build_density_map(scene(40, 40, {{10, 10}, {19.5, 10}, {30, 30}}), GaussianSpec{});
  double g = region_count(gt, Rect{0, 0, 20, 20});
  EXPECT_GT(g, 1.0);
  EXPECT_LT(g, 2.0);
  EXPECT_NE(g, std::round(g));
}
