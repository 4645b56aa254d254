#pragma once

#include <cstdint>
#include <vector>

#include "evcrowd/error.hpp"
#include "evcrowd/grid.hpp"

namespace evcrowd {

/// Summed-area table with a zero top row and left column.
///
/// Alongside the running sums it keeps a running count of non-zero pixels,
/// so a rectangle containing only zeros sums to exactly 0 instead of the
/// rounding residue of four large partial sums.
class IntegralTable {
 public:
  explicit IntegralTable(const DensityMap& map)
      : height_(map.height()),
        width_(map.width()),
        sums_((height_ + 1) * (width_ + 1), 0.0),
        support_((height_ + 1) * (width_ + 1), 0) {
    const std::size_t stride = width_ + 1;
    for (std::size_t r = 0; r < height_; ++r) {
      double row_sum = 0.0;
      std::uint32_t row_support = 0;
      for (std::size_t c = 0; c < width_; ++c) {
        double v = map.at(r, c);
        row_sum += v;
        row_support += v != 0.0 ? 1u : 0u;
        sums_[(r + 1) * stride + c + 1] = sums_[r * stride + c + 1] + row_sum;
        support_[(r + 1) * stride + c + 1] = support_[r * stride + c + 1] + row_support;
      }
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  /// Cumulative sum over rows [0, row) and columns [0, col).
  double cumulative(std::size_t row, std::size_t col) const {
    return sums_[row * (width_ + 1) + col];
  }

  double region_sum(const Rect& r) const {
    if (!r.fits(height_, width_)) {
      throw BoundsError("region " + to_string(r) + " is not inside the " +
                        std::to_string(height_) + "x" + std::to_string(width_) + " table");
    }
    return region_sum_unchecked(r);
  }

  double region_sum_unchecked(const Rect& r) const {
    const std::size_t stride = width_ + 1;
    const std::size_t top = r.y * stride;
    const std::size_t bottom = (r.y + r.height) * stride;
    const std::size_t left = r.x;
    const std::size_t right = r.x + r.width;
    std::uint32_t nonzero = support_[bottom + right] - support_[top + right] -
                            support_[bottom + left] + support_[top + left];
    if (nonzero == 0) return 0.0;
    double s = sums_[bottom + right] - sums_[top + right] - sums_[bottom + left] + sums_[top + left];
    // The source map is non-negative.
    return s > 0.0 ? s : 0.0;
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> sums_;
  std::vector<std::uint32_t> support_;
};

inline IntegralTable integral_image(const DensityMap& map) { return IntegralTable(map); }

}  // namespace evcrowd
