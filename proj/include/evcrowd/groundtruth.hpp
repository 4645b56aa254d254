#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evcrowd/annotations.hpp"
#include "evcrowd/error.hpp"
#include "evcrowd/grid.hpp"

namespace evcrowd {

struct GaussianSpec {
  double sigma0 = 3.0;            // base bandwidth in pixels
  double truncation_radius = 4.0;  // kernel support radius in units of sigma

  void validate() const {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
      throw ParameterError("sigma0 must be positive, got " + std::to_string(sigma0));
    }
    if (!(truncation_radius >= 3.0) || !std::isfinite(truncation_radius)) {
      throw ParameterError("truncation radius must be at least 3 sigma, got " +
                           std::to_string(truncation_radius));
    }
  }
};

struct GroundTruthReport {
  std::size_t clipped_kernels = 0;  // heads whose support was cut by the image border
};

/// Renders one unit-mass Gaussian per head. Each kernel is evaluated at
/// pixel centers within truncation_radius * sigma of the head, clipped to
/// the image and renormalized over what remains, so every head contributes
/// exactly 1 to the total. sigma = sigma0 * perspective scale at the head row.
inline DensityMap build_density_map(const HeadAnnotations& ann, const GaussianSpec& spec,
                                    GroundTruthReport* report = nullptr) {
  ann.validate();
  spec.validate();
  const auto H = static_cast<long>(ann.height);
  const auto W = static_cast<long>(ann.width);
  std::vector<double> out(ann.height * ann.width, 0.0);
  std::vector<double> kernel;
  std::size_t clipped = 0;

  for (const auto& head : ann.points) {
    const double sigma = spec.sigma0 * ann.perspective.scale_at(head.y);
    const double radius = spec.truncation_radius * sigma;
    const double r2 = radius * radius;
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);

    // Pixel c has center c + 0.5; keep centers within the radius.
    long c0 = static_cast<long>(std::ceil(head.x - radius - 0.5));
    long c1 = static_cast<long>(std::floor(head.x + radius - 0.5));
    long r0 = static_cast<long>(std::ceil(head.y - radius - 0.5));
    long r1 = static_cast<long>(std::floor(head.y + radius - 0.5));
    if (c0 < 0 || r0 < 0 || c1 >= W || r1 >= H) ++clipped;
    c0 = std::max(c0, 0L);
    r0 = std::max(r0, 0L);
    c1 = std::min(c1, W - 1);
    r1 = std::min(r1, H - 1);

    kernel.clear();
    double total = 0.0;
    for (long r = r0; r <= r1; ++r) {
      double dy = static_cast<double>(r) + 0.5 - head.y;
      for (long c = c0; c <= c1; ++c) {
        double dx = static_cast<double>(c) + 0.5 - head.x;
        double d2 = dx * dx + dy * dy;
        double v = d2 <= r2 ? std::exp(-d2 * inv_two_var) : 0.0;
        kernel.push_back(v);
        total += v;
      }
    }

    if (!(total > 0.0)) {
      // Support too small to reach any pixel center: deposit on the host pixel.
      auto r = static_cast<std::size_t>(head.y);
      auto c = static_cast<std::size_t>(head.x);
      out[r * ann.width + c] += 1.0;
      continue;
    }
    std::size_t k = 0;
    for (long r = r0; r <= r1; ++r) {
      for (long c = c0; c <= c1; ++c, ++k) {
        out[static_cast<std::size_t>(r) * ann.width + static_cast<std::size_t>(c)] +=
            kernel[k] / total;
      }
    }
  }
  if (report) report->clipped_kernels = clipped;
  return DensityMap(ann.height, ann.width, std::move(out));
}

/// Sum of the map over a rectangle.
inline double region_count(const DensityMap& gt, const Rect& rect) {
  if (!rect.fits(gt.height(), gt.width())) {
    throw BoundsError("region " + to_string(rect) + " is not inside the " +
                      std::to_string(gt.height()) + "x" + std::to_string(gt.width()) + " map");
  }
  double total = 0.0;
  for (std::size_t r = rect.y; r < rect.y + rect.height; ++r) {
    for (std::size_t c = rect.x; c < rect.x + rect.width; ++c) total += gt.at(r, c);
  }
  return total;
}

}  // namespace evcrowd
