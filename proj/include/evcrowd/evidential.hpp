#pragma once

// Evidential fusion of an ensemble of likelihood maps over the frame
// {Head, NotHead}. Every pixel of every source becomes a mass function over
// {empty, H, notH, Theta}; sources are discounted by their distance to the
// per-pixel median, combined with the unnormalized conjunctive rule, and
// read out as pignistic probability plus belief/plausibility bounds.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evcrowd/error.hpp"
#include "evcrowd/grid.hpp"
#include "evcrowd/parallel.hpp"

namespace evcrowd {

enum class Hypothesis { kEmpty, kHead, kNotHead, kTheta };

/// Mass function on the powerset of {H, notH}.
struct Mass {
  double empty = 0.0;
  double head = 0.0;
  double not_head = 0.0;
  double theta = 0.0;

  static constexpr Mass vacuous() { return {0.0, 0.0, 0.0, 1.0}; }
  static constexpr Mass bayesian(double head_likelihood) {
    return {0.0, head_likelihood, 1.0 - head_likelihood, 0.0};
  }

  double sum() const { return empty + head + not_head + theta; }

  double operator[](Hypothesis h) const {
    switch (h) {
      case Hypothesis::kEmpty: return empty;
      case Hypothesis::kHead: return head;
      case Hypothesis::kNotHead: return not_head;
      case Hypothesis::kTheta: return theta;
    }
    return 0.0;
  }
};

/// Four-layer H x W map of per-pixel masses.
class BbaMap {
 public:
  BbaMap(std::size_t height, std::size_t width, std::vector<Mass> masses)
      : height_(height), width_(width), masses_(std::move(masses)) {
    detail::check_dims(height, width, "BBA map");
    if (masses_.size() != height * width) {
      throw ShapeError("BBA map expects " + std::to_string(height * width) + " pixels, got " +
                       std::to_string(masses_.size()));
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return masses_.size(); }

  const Mass& at(std::size_t pixel) const { return masses_[pixel]; }
  const Mass& at(std::size_t row, std::size_t col) const { return masses_[row * width_ + col]; }
  std::span<const Mass> masses() const noexcept { return masses_; }

  /// One hypothesis layer as an H x W map.
  DensityMap layer(Hypothesis h) const {
    std::vector<double> v(masses_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = masses_[i][h];
    return DensityMap(height_, width_, std::move(v));
  }

  bool same_shape(const BbaMap& o) const { return height_ == o.height_ && width_ == o.width_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<Mass> masses_;
};

/// Per-pixel reliability coefficients of one source, each in [0, 1].
struct DiscountMap {
  std::size_t height = 0;
  std::size_t width = 0;
  double alpha = 1.0;
  std::vector<double> coefficients;

  double mean() const {
    double s = 0.0;
    for (double g : coefficients) s += g;
    return coefficients.empty() ? 0.0 : s / static_cast<double>(coefficients.size());
  }
};

struct FusionResult {
  BbaMap combined;
  DensityMap betp;       // BetP(H)
  DensityMap bel;        // normalized Bel(H)
  DensityMap pl;         // normalized Pl(H)
  DensityMap ignorance;  // m(Theta)
  DensityMap conflict;   // m(empty)
};

inline constexpr double kSingularConflictGuard = 1e-12;

// ---------------------------------------------------------------------------
// Per-pixel primitives

/// Reliability discounting of a Bayesian mass: singletons scale by gamma,
/// the remainder moves to Theta.
inline Mass discount_mass(const Mass& m, double gamma) {
  Mass out;
  out.head = gamma * m.head;
  out.not_head = gamma * m.not_head;
  out.theta = 1.0 - out.head - out.not_head;
  return out;
}

/// Unnormalized conjunctive combination of any number of masses.
///
/// Uses commonalities q(A) = sum of m(B) over B containing A, which multiply
/// under the conjunctive rule: m(H) = prod(m_t(H) + m_t(Theta)) - prod m_t(Theta),
/// likewise for notH, and m(Theta) = prod m_t(Theta).
inline Mass combine_masses(std::span<const Mass> sources) {
  double q_head = 1.0;
  double q_not_head = 1.0;
  double q_theta = 1.0;
  for (const auto& m : sources) {
    q_head *= m.head + m.theta;
    q_not_head *= m.not_head + m.theta;
    q_theta *= m.theta;
  }
  Mass out;
  out.theta = q_theta;
  out.head = std::max(0.0, q_head - q_theta);
  out.not_head = std::max(0.0, q_not_head - q_theta);
  out.empty = std::max(0.0, 1.0 - out.head - out.not_head - out.theta);
  return out;
}

/// 1 - m(empty), evaluated as the sum of non-empty masses so ratios stay in [0,1].
inline double normalizer(const Mass& m, std::size_t pixel, std::size_t width) {
  double denom = (m.head + m.theta) + m.not_head;
  if (denom < kSingularConflictGuard) throw SingularPixelError(pixel / width, pixel % width);
  return denom;
}

struct Bounds {
  double bel = 0.0;
  double betp = 0.0;
  double pl = 0.0;
};

/// Normalized Bel, BetP and Pl of a singleton hypothesis (H or notH).
inline Bounds singleton_bounds(const Mass& m, Hypothesis singleton, std::size_t pixel = 0,
                               std::size_t width = 1) {
  if (singleton != Hypothesis::kHead && singleton != Hypothesis::kNotHead) {
    throw ParameterError("singleton_bounds needs H or notH");
  }
  double a = m[singleton];
  double other = singleton == Hypothesis::kHead ? m.not_head : m.head;
  double denom = (a + m.theta) + other;
  if (denom < kSingularConflictGuard) throw SingularPixelError(pixel / width, pixel % width);
  return {a / denom, (a + 0.5 * m.theta) / denom, (a + m.theta) / denom};
}

// ---------------------------------------------------------------------------
// Map-level operations

/// Bayesian masses per source: m(H) = likelihood, m(notH) = 1 - likelihood.
inline std::vector<BbaMap> allocate_bayesian(const RealizationStack& stack) {
  std::vector<BbaMap> out;
  out.reserve(stack.sources());
  for (std::size_t t = 0; t < stack.sources(); ++t) {
    auto src = stack.source(t);
    std::vector<Mass> masses(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) masses[i] = Mass::bayesian(src[i]);
    out.emplace_back(stack.height(), stack.width(), std::move(masses));
  }
  return out;
}

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in [0,1], got " + std::to_string(alpha));
  }
}

/// Median of the values; even counts use the mean of the two middle order
/// statistics. Reorders the input.
inline double median_inplace(std::span<double> values) {
  std::size_t n = values.size();
  std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  double upper = values[mid];
  if (n % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Per-pixel median over sources.
inline std::vector<double> median_map(const RealizationStack& stack, Parallelism par = {}) {
  std::vector<double> med(stack.pixels());
  parallel_for(stack.pixels(), par, [&](std::size_t begin, std::size_t end) {
    std::vector<double> column(stack.sources());
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t t = 0; t < stack.sources(); ++t) column[t] = stack.at(t, i);
      med[i] = median_inplace(column);
    }
  });
  return med;
}

/// Discount coefficient per source and pixel:
/// gamma = alpha * (1 - |likelihood - median over sources|).
inline std::vector<DiscountMap> compute_discount_maps(const RealizationStack& stack, double alpha,
                                                      Parallelism par = {}) {
  check_alpha(alpha);
  auto med = median_map(stack, par);
  std::vector<DiscountMap> out;
  out.reserve(stack.sources());
  for (std::size_t t = 0; t < stack.sources(); ++t) {
    DiscountMap d{stack.height(), stack.width(), alpha, std::vector<double>(stack.pixels())};
    auto src = stack.source(t);
    for (std::size_t i = 0; i < src.size(); ++i) {
      d.coefficients[i] = alpha * (1.0 - std::abs(src[i] - med[i]));
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline BbaMap discount(const BbaMap& bba, const DiscountMap& gamma) {
  if (bba.height() != gamma.height || bba.width() != gamma.width ||
      gamma.coefficients.size() != bba.pixels()) {
    throw ShapeError("discount: BBA map is " + std::to_string(bba.height()) + "x" +
                     std::to_string(bba.width()) + ", discount map is " +
                     std::to_string(gamma.height) + "x" + std::to_string(gamma.width));
  }
  std::vector<Mass> out(bba.pixels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Mass& m = bba.at(i);
    if (m.empty != 0.0 || m.theta != 0.0) {
      throw ParameterError("discount expects Bayesian masses; pixel " + std::to_string(i) +
                           " has mass on empty set or Theta");
    }
    double g = gamma.coefficients[i];
    if (!(g >= 0.0 && g <= 1.0)) {
      throw ParameterError("discount coefficient outside [0,1] at pixel " + std::to_string(i));
    }
    out[i] = discount_mass(m, g);
  }
  return BbaMap(bba.height(), bba.width(), std::move(out));
}

inline BbaMap combine_conjunctive(std::span<const BbaMap> bbas, Parallelism par = {}) {
  if (bbas.empty()) throw ParameterError("conjunctive combination needs at least one source");
  for (const auto& b : bbas) {
    if (!b.same_shape(bbas[0])) throw ShapeError("conjunctive combination: shape mismatch");
  }
  std::vector<Mass> out(bbas[0].pixels());
  parallel_for(out.size(), par, [&](std::size_t begin, std::size_t end) {
    std::vector<Mass> column(bbas.size());
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t t = 0; t < bbas.size(); ++t) column[t] = bbas[t].at(i);
      out[i] = combine_masses(column);
    }
  });
  return BbaMap(bbas[0].height(), bbas[0].width(), std::move(out));
}

/// BetP(H) per pixel. Throws SingularPixelError on a totally conflicting pixel.
inline DensityMap pignistic(const BbaMap& bba) {
  std::vector<double> v(bba.pixels());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = singleton_bounds(bba.at(i), Hypothesis::kHead, i, bba.width()).betp;
  }
  return DensityMap(bba.height(), bba.width(), std::move(v));
}

/// Normalized (Bel, Pl) of the given singleton per pixel.
inline std::pair<DensityMap, DensityMap> belief_plausibility(
    const BbaMap& bba, Hypothesis singleton = Hypothesis::kHead) {
  std::vector<double> bel(bba.pixels());
  std::vector<double> pl(bba.pixels());
  for (std::size_t i = 0; i < bel.size(); ++i) {
    auto b = singleton_bounds(bba.at(i), singleton, i, bba.width());
    bel[i] = b.bel;
    pl[i] = b.pl;
  }
  return {DensityMap(bba.height(), bba.width(), std::move(bel)),
          DensityMap(bba.height(), bba.width(), std::move(pl))};
}

/// Full pipeline: Bayesian allocation, median discounting, conjunctive
/// combination and BetP/Bel/Pl readout. Streams pixel by pixel through the
/// same primitives as the individual operations.
inline FusionResult fuse_ensemble(const RealizationStack& stack, double alpha,
                                  Parallelism par = {}) {
  check_alpha(alpha);
  const std::size_t n = stack.pixels();
  const std::size_t sources = stack.sources();
  std::vector<Mass> combined(n);
  std::vector<double> betp(n), bel(n), pl(n), ignorance(n), conflict(n);

  parallel_for(n, par, [&](std::size_t begin, std::size_t end) {
    std::vector<double> column(sources);
    std::vector<Mass> masses(sources);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t t = 0; t < sources; ++t) column[t] = stack.at(t, i);
      double med = median_inplace(column);
      for (std::size_t t = 0; t < sources; ++t) {
        double v = stack.at(t, i);
        double gamma = alpha * (1.0 - std::abs(v - med));
        masses[t] = discount_mass(Mass::bayesian(v), gamma);
      }
      Mass m = combine_masses(masses);
      auto b = singleton_bounds(m, Hypothesis::kHead, i, stack.width());
      combined[i] = m;
      betp[i] = b.betp;
      bel[i] = b.bel;
      pl[i] = b.pl;
      ignorance[i] = m.theta;
      conflict[i] = m.empty;
    }
  });

  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  return FusionResult{BbaMap(h, w, std::move(combined)),
                      DensityMap(h, w, std::move(betp)),
                      DensityMap(h, w, std::move(bel)),
                      DensityMap(h, w, std::move(pl)),
                      DensityMap(h, w, std::move(ignorance)),
                      DensityMap(h, w, std::move(conflict))};
}

}  // namespace evcrowd
