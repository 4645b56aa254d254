#include <gtest/gtest.h>

#include <cstring>

#include "evcrowd/evidential.hpp"
#include "evcrowd/groundtruth.hpp"
#include "evcrowd/synth.hpp"

using namespace evcrowd;

TEST(CounterRng, StatelessAndStreamSeparated) {
  CounterRng a(7, 1), b(7, 1), c(7, 2), d(8, 1);
  EXPECT_EQ(a.bits(123), b.bits(123));
  EXPECT_NE(a.bits(123), c.bits(123));
  EXPECT_NE(a.bits(123), d.bits(123));
  double mean = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = a.uniform(i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    double z = a.normal(i);
    mean += z;
    sq += z * z;
  }
  EXPECT_NEAR(mean / n, 0.0, 0.03);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(GenerateScene, EmptyAndDeterministic) {
  EXPECT_TRUE(generate_scene(64, 64, 0, 8, 7).points.empty());
  auto a = generate_scene(128, 96, 30, 6.0, 7);
  auto b = generate_scene(128, 96, 30, 6.0, 7);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, generate_scene(128, 96, 30, 6.0, 8).points);
}

TEST(GenerateScene, RespectsSpacingAndBounds) {
  auto s = generate_scene(256, 256, 50, 8.0, 7);
  ASSERT_EQ(s.points.size(), 50u);
  EXPECT_NO_THROW(s.validate());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    for (std::size_t j = i + 1; j < s.points.size(); ++j) {
      double dx = s.points[i].x - s.points[j].x, dy = s.points[i].y - s.points[j].y;
      EXPECT_GE(std::sqrt(dx * dx + dy * dy), 8.0);
    }
  }
}

TEST(GenerateScene, InfeasiblePackingFails) {
  EXPECT_THROW(generate_scene(10, 10, 50, 8.0, 1), PackingError);
}

TEST(GenerateRealizations, ZeroNoiseCopiesGroundTruth) {
  auto gt = build_density_map(generate_scene(32, 32, 4, 6.0, 2), GaussianSpec{});
  auto s = generate_realizations(gt, 3, NoiseModel{});
  ASSERT_EQ(s.stack.sources(), 3u);
  EXPECT_TRUE(s.outliers.empty());
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < gt.size(); ++i) {
      EXPECT_EQ(s.stack.at(t, i), std::clamp(gt.values()[i], 0.0, 1.0));
    }
  }
}

TEST(GenerateRealizations, DeterministicPerSeed) {
  auto gt = build_density_map(generate_scene(48, 40, 10, 5.0, 3), GaussianSpec{});
  NoiseModel n{0.05, 1.0, 0.1, 20.0, 2, 7};
  auto a = generate_realizations(gt, 6, n);
  auto b = generate_realizations(gt, 6, n);
  EXPECT_EQ(a.outliers, b.outliers);
  EXPECT_EQ(std::memcmp(a.stack.values().data(), b.stack.values().data(),
                        a.stack.values().size() * sizeof(double)),
            0);
  n.seed = 8;
  auto c = generate_realizations(gt, 6, n);
  EXPECT_NE(std::memcmp(a.stack.values().data(), c.stack.values().data(),
                        a.stack.values().size() * sizeof(double)),
            0);
}

TEST(GenerateRealizations, ValuesAreLikelihoods) {
  auto gt = build_density_map(generate_scene(40, 40, 12, 5.0, 3), GaussianSpec{});
  auto s = generate_realizations(gt, 4, NoiseModel{0.3, 0.0, 0.5, 50.0, 1, 1});
  for (double v : s.stack.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GenerateRealizations, OutlierSourcesGetLowestDiscount) {
  auto gt = build_density_map(generate_scene(96, 96, 30, 8.0, 7), GaussianSpec{});
  for (std::size_t outliers : {1u, 2u, 3u}) {
    auto s = generate_realizations(gt, 10, NoiseModel{0.05, 1.0, 0.0, 20.0, outliers, 7});
    ASSERT_EQ(s.outliers.size(), outliers);
    auto gammas = compute_discount_maps(s.stack, 0.8);
    double worst_honest = 1.0;
    for (std::size_t t = 0; t < 10; ++t) {
      if (std::find(s.outliers.begin(), s.outliers.end(), t) == s.outliers.end()) {
        worst_honest = std::min(worst_honest, gammas[t].mean());
      }
    }
    for (auto t : s.outliers) EXPECT_LT(gammas[t].mean(), worst_honest) << "outlier " << t;
  }
}

TEST(GenerateRealizations, ParameterErrors) {
  DensityMap gt(4, 4);
  EXPECT_THROW(generate_realizations(gt, 0, NoiseModel{}), ParameterError);
  NoiseModel n;
  n.outlier_sources = 3;
  EXPECT_THROW(generate_realizations(gt, 3, n), ParameterError);
  n.outlier_sources = 0;
  n.gaussian_sigma = -1.0;
  EXPECT_THROW(generate_realizations(gt, 3, n), ParameterError);
}

TEST(GaussianBlur, PreservesConstantsAndMassAwayFromBorders) {
  std::vector<double> flat(20 * 20, 0.3);
  for (double v : gaussian_blur(flat, 20, 20, 2.0)) EXPECT_NEAR(v, 0.3, 1e-12);
  std::vector<double> spike(41 * 41, 0.0);
  spike[20 * 41 + 20] = 1.0;
  double total = 0.0;
  for (double v : gaussian_blur(spike, 41, 41, 1.5)) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}
