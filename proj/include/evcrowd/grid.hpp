#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evcrowd/error.hpp"

namespace evcrowd {

/// Axis-aligned pixel rectangle; (x, y) is the top-left column/row.
struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  static Rect square(std::size_t x, std::size_t y, std::size_t side) {
    return Rect{x, y, side, side};
  }

  bool fits(std::size_t image_height, std::size_t image_width) const {
    return width > 0 && height > 0 && x + width <= image_width && y + height <= image_height;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::string to_string(const Rect& r) {
  return "[x=" + std::to_string(r.x) + ", y=" + std::to_string(r.y) +
         ", w=" + std::to_string(r.width) + ", h=" + std::to_string(r.height) + "]";
}

namespace detail {

inline void check_dims(std::size_t height, std::size_t width, const char* what) {
  if (height == 0 || width == 0) {
    throw ShapeError(std::string(what) + " must have non-zero dimensions, got " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

inline void check_finite(std::span<const double> values, const char* what) {
  auto it = std::find_if(values.begin(), values.end(),
                         [](double v) { return !std::isfinite(v); });
  if (it != values.end()) {
    throw DataError(std::string(what) + " holds a non-finite value at flat index " +
                    std::to_string(it - values.begin()));
  }
}

}  // namespace detail

/// Row-major H x W grid of finite, non-negative reals.
///
/// Used for realization likelihoods, fused BetP/Bel/Pl layers and
/// ground-truth densities alike. Immutable after construction.
class DensityMap {
 public:
  DensityMap(std::size_t height, std::size_t width)
      : height_(height), width_(width), values_(height * width, 0.0) {
    detail::check_dims(height, width, "density map");
  }

  DensityMap(std::size_t height, std::size_t width, std::vector<double> values)
      : height_(height), width_(width), values_(std::move(values)) {
    detail::check_dims(height, width, "density map");
    if (values_.size() != height * width) {
      throw ShapeError("density map expects " + std::to_string(height * width) +
                       " values, got " + std::to_string(values_.size()));
    }
    detail::check_finite(values_, "density map");
    auto neg = std::find_if(values_.begin(), values_.end(), [](double v) { return v < 0.0; });
    if (neg != values_.end()) {
      throw DataError("density map holds a negative value at flat index " +
                      std::to_string(neg - values_.begin()));
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const double> values() const noexcept { return values_; }

  double sum() const {
    double total = 0.0;
    for (double v : values_) total += v;
    return total;
  }

  bool same_shape(const DensityMap& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

inline void require_same_shape(const DensityMap& a, const DensityMap& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) +
                     "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                     "x" + std::to_string(b.width()));
  }
}

/// T x H x W stack of per-source likelihood maps, every value in [0, 1].
class RealizationStack {
 public:
  RealizationStack(std::size_t sources, std::size_t height, std::size_t width,
                   std::vector<double> values)
      : sources_(sources), height_(height), width_(width), values_(std::move(values)) {
    validate_shape();
    detail::check_finite(values_, "realization stack");
    auto bad = std::find_if(values_.begin(), values_.end(),
                            [](double v) { return v < 0.0 || v > 1.0; });
    if (bad != values_.end()) {
      throw DataError("realization stack value outside [0,1] at flat index " +
                      std::to_string(bad - values_.begin()));
    }
  }

  /// Builds a stack from raw values, clamping anything outside [0, 1].
  /// Returns the stack and the number of clamped entries.
  static std::pair<RealizationStack, std::size_t> clamped(std::size_t sources,
                                                          std::size_t height,
                                                          std::size_t width,
                                                          std::vector<double> values) {
    detail::check_finite(values, "realization stack");
    std::size_t count = 0;
    for (double& v : values) {
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++count;
      }
    }
    return {RealizationStack(sources, height, width, std::move(values)), count};
  }

  /// Stacks equally shaped maps; values must already lie in [0, 1].
  static RealizationStack from_maps(std::span<const DensityMap> maps) {
    if (maps.empty()) throw ParameterError("realization stack needs at least one source");
    std::vector<double> values;
    values.reserve(maps.size() * maps[0].size());
    for (const auto& m : maps) {
      require_same_shape(maps[0], m, "realization stack");
      values.insert(values.end(), m.values().begin(), m.values().end());
    }
    return RealizationStack(maps.size(), maps[0].height(), maps[0].width(), std::move(values));
  }

  std::size_t sources() const noexcept { return sources_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  std::span<const double> source(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * pixels(), pixels());
  }
  double at(std::size_t t, std::size_t pixel) const { return values_[t * pixels() + pixel]; }
  std::span<const double> values() const noexcept { return values_; }

  DensityMap map(std::size_t t) const {
    auto s = source(t);
    return DensityMap(height_, width_, std::vector<double>(s.begin(), s.end()));
  }

 private:
  void validate_shape() const {
    if (sources_ == 0) throw ParameterError("realization stack needs at least one source");
    detail::check_dims(height_, width_, "realization stack");
    if (values_.size() != sources_ * height_ * width_) {
      throw ShapeError("realization stack expects " +
                       std::to_string(sources_ * height_ * width_) + " values, got " +
                       std::to_string(values_.size()));
    }
  }

  std::size_t sources_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

}  // namespace evcrowd
