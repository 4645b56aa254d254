#pragma once

// Deterministic synthetic scenes and noisy ensembles for exercising the
// fusion and evaluation pipeline without a trained network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "evcrowd/annotations.hpp"
#include "evcrowd/error.hpp"
#include "evcrowd/grid.hpp"
#include "evcrowd/rng.hpp"

namespace evcrowd {

namespace stream {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kOutlierPick = 3;
}  // namespace stream

inline constexpr std::size_t kPackingAttemptsPerHead = 10000;

/// Poisson-disk style rejection sampling of head centers.
inline HeadAnnotations generate_scene(std::size_t width, std::size_t height, std::size_t n_heads,
                                      double min_spacing, std::uint64_t seed) {
  if (width == 0 || height == 0) throw ParameterError("scene size must be non-zero");
  if (!(min_spacing >= 0.0)) throw ParameterError("min_spacing must be non-negative");
  HeadAnnotations ann;
  ann.width = width;
  ann.height = height;
  ann.points.reserve(n_heads);

  const CounterRng rng(seed, stream::kScene);
  const double spacing2 = min_spacing * min_spacing;
  const std::uint64_t budget = kPackingAttemptsPerHead * std::max<std::uint64_t>(n_heads, 1);
  std::uint64_t attempt = 0;
  while (ann.points.size() < n_heads) {
    if (attempt >= budget) {
      throw PackingError("placed " + std::to_string(ann.points.size()) + " of " +
                         std::to_string(n_heads) + " heads with spacing " +
                         std::to_string(min_spacing) + " in " + std::to_string(width) + "x" +
                         std::to_string(height) + " after " + std::to_string(attempt) +
                         " attempts");
    }
    HeadPoint p{rng.uniform(2 * attempt) * static_cast<double>(width),
                rng.uniform(2 * attempt + 1) * static_cast<double>(height)};
    ++attempt;
    bool ok = std::all_of(ann.points.begin(), ann.points.end(), [&](const HeadPoint& q) {
      double dx = p.x - q.x;
      double dy = p.y - q.y;
      return dx * dx + dy * dy >= spacing2;
    });
    if (ok) ann.points.push_back(p);
  }
  return ann;
}

struct NoiseModel {
  double gaussian_sigma = 0.0;  // additive per-pixel noise
  double blur_sigma = 0.0;      // pixels
  double bias = 0.0;            // multiplicative: values scale by (1 + bias)
  double gain = 1.0;            // density-to-likelihood scale applied before bias
  std::size_t outlier_sources = 0;
  std::uint64_t seed = 0;
};

struct SyntheticStack {
  RealizationStack stack;
  std::vector<std::size_t> outliers;  // source indices replaced by corrupted maps
};

/// Separable Gaussian blur; taps falling outside the image are dropped and
/// the remaining weights renormalized.
inline std::vector<double> gaussian_blur(std::span<const double> values, std::size_t height,
                                         std::size_t width, double sigma) {
  std::vector<double> src(values.begin(), values.end());
  if (sigma <= 0.0) return src;
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k) {
    taps[static_cast<std::size_t>(k + radius)] =
        std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
  }
  auto pass = [&](const std::vector<double>& in, bool horizontal) {
    std::vector<double> out(in.size());
    const auto H = static_cast<long>(height);
    const auto W = static_cast<long>(width);
    for (long r = 0; r < H; ++r) {
      for (long c = 0; c < W; ++c) {
        double acc = 0.0;
        double norm = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          long rr = horizontal ? r : r + k;
          long cc = horizontal ? c + k : c;
          if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
          double t = taps[static_cast<std::size_t>(k + radius)];
          acc += t * in[static_cast<std::size_t>(rr * W + cc)];
          norm += t;
        }
        out[static_cast<std::size_t>(r * W + c)] = acc / norm;
      }
    }
    return out;
  };
  return pass(pass(src, true), false);
}

/// T noisy likelihood maps derived from a ground-truth density:
/// clamp(blur(gt) * gain * (1 + bias) + noise, 0, 1). Outlier sources are
/// corrupted copies, alternating between inverted and spatially shifted.
inline SyntheticStack generate_realizations(const DensityMap& gt, std::size_t sources,
                                            const NoiseModel& noise) {
  if (sources == 0) throw ParameterError("need at least one source");
  if (noise.outlier_sources >= sources) {
    throw ParameterError("outlier sources (" + std::to_string(noise.outlier_sources) +
                         ") must be fewer than T (" + std::to_string(sources) + ")");
  }
  if (!(noise.gaussian_sigma >= 0.0) || !(noise.blur_sigma >= 0.0)) {
    throw ParameterError("noise and blur sigmas must be non-negative");
  }
  const std::size_t H = gt.height();
  const std::size_t W = gt.width();
  const std::size_t n = H * W;

  auto clean = gaussian_blur(gt.values(), H, W, noise.blur_sigma);
  for (double& v : clean) v *= noise.gain * (1.0 + noise.bias);

  // Pick outlier slots with a seeded Fisher-Yates shuffle.
  std::vector<std::size_t> order(sources);
  for (std::size_t t = 0; t < sources; ++t) order[t] = t;
  const CounterRng pick(noise.seed, stream::kOutlierPick);
  for (std::size_t i = sources - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(pick.uniform(i) * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<std::size_t> outliers(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(noise.outlier_sources));
  std::sort(outliers.begin(), outliers.end());

  const CounterRng rng(noise.seed, stream::kNoise);
  std::vector<double> values(sources * n);
  for (std::size_t t = 0; t < sources; ++t) {
    auto slot = std::find(outliers.begin(), outliers.end(), t);
    bool is_outlier = slot != outliers.end();
    auto kind = static_cast<std::size_t>(slot - outliers.begin());
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        std::size_t i = r * W + c;
        double base = clean[i];
        if (is_outlier) {
          if (kind % 2 == 0) {
            base = 1.0 - std::clamp(clean[i], 0.0, 1.0);
          } else {
            base = clean[((r + H / 3) % H) * W + (c + W / 3) % W];
          }
        }
        double v = base;
        if (noise.gaussian_sigma > 0.0) v += noise.gaussian_sigma * rng.normal(t * n + i);
        values[t * n + i] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return SyntheticStack{RealizationStack(sources, H, W, std::move(values)), std::move(outliers)};
}

}  // namespace evcrowd
