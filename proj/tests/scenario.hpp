#pragma once

// Fixed synthetic benchmark shared by the acceptance suite and the
// end-to-end CLI test.

#include "evcrowd/groundtruth.hpp"
#include "evcrowd/synth.hpp"

namespace scenario {

inline constexpr std::uint64_t kSeed = 7;
inline constexpr std::size_t kWidth = 256;
inline constexpr std::size_t kHeight = 256;
inline constexpr std::size_t kHeads = 50;
inline constexpr double kSpacing = 8.0;
inline constexpr std::size_t kSources = 10;

inline evcrowd::NoiseModel noise() {
  evcrowd::NoiseModel n;
  n.gaussian_sigma = 0.05;
  n.blur_sigma = 1.0;
  n.gain = 50.0;  // peak of a sigma-3 kernel (~0.018) maps to ~0.9
  n.outlier_sources = 1;
  n.seed = kSeed;
  return n;
}

inline evcrowd::HeadAnnotations scene() {
  return evcrowd::generate_scene(kWidth, kHeight, kHeads, kSpacing, kSeed);
}

inline evcrowd::DensityMap ground_truth() {
  return evcrowd::build_density_map(scene(), evcrowd::GaussianSpec{});
}

}  // namespace scenario
