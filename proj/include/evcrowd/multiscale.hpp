#pragma once

// Multiscale evaluation of count intervals. Each scale is a set of squares
// of one side length; sides shrink geometrically from the largest square
// that fits the image. For every square the lower, central and upper count
// estimates come from Bel(H), BetP(H) and Pl(H) summed over the square.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "evcrowd/error.hpp"
#include "evcrowd/evidential.hpp"
#include "evcrowd/grid.hpp"
#include "evcrowd/integral.hpp"
#include "evcrowd/parallel.hpp"

namespace evcrowd {

struct ScaleSpec {
  double delta = 1.1;
  double stride_fraction = 0.25;
  std::size_t min_side = 16;
  std::size_t max_scales = 1000;

  void validate() const {
    if (!(delta > 1.0) || !std::isfinite(delta)) {
      throw ParameterError("scale factor delta must exceed 1, got " + std::to_string(delta));
    }
    if (!(stride_fraction > 0.0 && stride_fraction <= 1.0)) {
      throw ParameterError("stride fraction must lie in (0,1], got " +
                           std::to_string(stride_fraction));
    }
    if (min_side == 0) throw ParameterError("min_side must be at least 1");
    if (max_scales == 0) throw ParameterError("max_scales must be at least 1");
  }
};

struct Scale {
  std::size_t index = 0;  // 1 = largest squares
  std::size_t side = 0;
  std::vector<Rect> squares;
};

/// Offsets along one axis: a regular grid plus a flush-to-edge placement.
inline std::vector<std::size_t> axis_origins(std::size_t extent, std::size_t side,
                                             std::size_t stride) {
  std::vector<std::size_t> origins;
  const std::size_t last = extent - side;
  for (std::size_t o = 0; o <= last; o += stride) origins.push_back(o);
  if (origins.back() != last) origins.push_back(last);
  return origins;
}

/// Side of scale i (1-based): floor(min(H, W) / delta^(i - 1)).
inline std::size_t scale_side(std::size_t height, std::size_t width, double delta,
                              std::size_t i) {
  double base = static_cast<double>(std::min(height, width));
  double side = base / std::pow(delta, static_cast<double>(i - 1));
  return static_cast<std::size_t>(std::floor(side + 1e-9));
}

inline std::vector<Scale> enumerate_scales(std::size_t height, std::size_t width,
                                           const ScaleSpec& spec) {
  spec.validate();
  if (std::min(height, width) < spec.min_side) {
    throw ParameterError("image " + std::to_string(height) + "x" + std::to_string(width) +
                         " is smaller than min_side " + std::to_string(spec.min_side));
  }
  std::vector<Scale> scales;
  std::size_t previous = 0;
  for (std::size_t i = 1; scales.size() < spec.max_scales; ++i) {
    std::size_t side = scale_side(height, width, spec.delta, i);
    if (side < spec.min_side) break;
    if (side == previous) continue;
    previous = side;
    auto stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(static_cast<double>(side) * spec.stride_fraction)));
    Scale s;
    s.index = scales.size() + 1;
    s.side = side;
    auto xs = axis_origins(width, side, stride);
    auto ys = axis_origins(height, side, stride);
    s.squares.reserve(xs.size() * ys.size());
    for (auto y : ys) {
      for (auto x : xs) s.squares.push_back(Rect::square(x, y, side));
    }
    scales.push_back(std::move(s));
  }
  return scales;
}

struct RegionStats {
  Rect region;
  double g = 0.0;        // ground-truth count
  double s_lower = 0.0;  // w * sum Bel(H)
  double s_mid = 0.0;    // w * sum BetP(H)
  double s_upper = 0.0;  // w * sum Pl(H)

  double width() const { return s_upper - s_lower; }
};

/// Summed-area tables for the bound layers and the ground truth.
///
/// Bel and Pl are tabulated as non-negative gaps below and above BetP, which
/// keeps s_lower <= s_mid <= s_upper exact under rounding.
class RegionEvaluator {
 public:
  RegionEvaluator(const DensityMap& bel, const DensityMap& betp, const DensityMap& pl,
                  const DensityMap& gt)
      : betp_(betp), lower_gap_(gap(betp, bel, "Bel")), upper_gap_(gap(pl, betp, "Pl")),
        gt_(check_gt(betp, gt)) {}

  RegionEvaluator(const FusionResult& fusion, const DensityMap& gt)
      : RegionEvaluator(fusion.bel, fusion.betp, fusion.pl, gt) {}

  std::size_t height() const { return betp_.height(); }
  std::size_t width() const { return betp_.width(); }

  RegionStats stats(const Rect& r, double w) const {
    if (!r.fits(height(), width())) {
      throw BoundsError("region " + to_string(r) + " is not inside the " +
                        std::to_string(height()) + "x" + std::to_string(width()) + " image");
    }
    double mid = betp_.region_sum_unchecked(r);
    double lower = mid - lower_gap_.region_sum_unchecked(r);
    double upper = mid + upper_gap_.region_sum_unchecked(r);
    return RegionStats{r, gt_.region_sum_unchecked(r), w * lower, w * mid, w * upper};
  }

 private:
  static IntegralTable gap(const DensityMap& hi, const DensityMap& lo, const char* name) {
    require_same_shape(hi, lo, name);
    std::vector<double> v(hi.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double d = hi.values()[i] - lo.values()[i];
      if (d < -1e-12) {
        throw DataError(std::string("bound layers out of order (Bel <= BetP <= Pl) at flat index ") +
                        std::to_string(i));
      }
      v[i] = d > 0.0 ? d : 0.0;
    }
    return IntegralTable(DensityMap(hi.height(), hi.width(), std::move(v)));
  }

  static const DensityMap& check_gt(const DensityMap& betp, const DensityMap& gt) {
    require_same_shape(betp, gt, "ground truth vs estimate");
    return gt;
  }

  IntegralTable betp_;
  IntegralTable lower_gap_;
  IntegralTable upper_gap_;
  IntegralTable gt_;
};

inline void check_w(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw ParameterError("count factor w must be positive, got " + std::to_string(w));
  }
}

inline std::vector<RegionStats> compute_bounds(const FusionResult& fusion, const DensityMap& gt,
                                               std::span<const Rect> regions, double w) {
  check_w(w);
  RegionEvaluator eval(fusion, gt);
  std::vector<RegionStats> out;
  out.reserve(regions.size());
  for (const auto& r : regions) out.push_back(eval.stats(r, w));
  return out;
}

/// Least-squares count factor w* = sum(p g) / sum(p^2) over every region of
/// every (BetP, ground truth) pair, with p = sum BetP and g = sum gt.
inline double calibrate_w(std::span<const DensityMap> betp_maps,
                          std::span<const DensityMap> gt_maps, std::span<const Rect> regions) {
  if (betp_maps.size() != gt_maps.size()) {
    throw ParameterError("calibration needs one ground-truth map per BetP map");
  }
  if (betp_maps.empty() || regions.empty()) {
    throw ParameterError("calibration needs at least one map and one region");
  }
  double pg = 0.0;
  double pp = 0.0;
  for (std::size_t k = 0; k < betp_maps.size(); ++k) {
    require_same_shape(betp_maps[k], gt_maps[k], "calibration");
    IntegralTable p_table(betp_maps[k]);
    IntegralTable g_table(gt_maps[k]);
    for (const auto& r : regions) {
      double p = p_table.region_sum(r);
      double g = g_table.region_sum(r);
      pg += p * g;
      pp += p * p;
    }
  }
  if (!(pp > 0.0)) {
    throw CalibrationError("every calibration region has zero predicted count");
  }
  return pg / pp;
}

enum class PepConvention {
  kOutside,    // fraction of squares whose g falls outside [s_lower, s_upper]
  kAsPrinted,  // fraction of squares whose g falls inside
};

inline bool covers(const RegionStats& s) { return s.g >= s.s_lower && s.g <= s.s_upper; }

/// Empty squares (g = 0) that are also predicted empty carry no information
/// and are left out; an empty square with a positive upper bound still counts.
inline bool pep_excluded(const RegionStats& s) { return s.g == 0.0 && s.s_upper == 0.0; }

struct MetricSummary {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

inline MetricSummary pep_summary(std::span<const RegionStats> stats,
                                 PepConvention convention = PepConvention::kOutside) {
  if (stats.empty()) throw ParameterError("PEP needs at least one region");
  MetricSummary out;
  std::size_t hits = 0;
  for (const auto& s : stats) {
    if (pep_excluded(s)) {
      ++out.excluded;
      continue;
    }
    ++out.used;
    bool inside = covers(s);
    if (convention == PepConvention::kOutside ? !inside : inside) ++hits;
  }
  out.value = out.used ? static_cast<double>(hits) / static_cast<double>(out.used) : 0.0;
  return out;
}

inline double pep(std::span<const RegionStats> stats,
                  PepConvention convention = PepConvention::kOutside) {
  return pep_summary(stats, convention).value;
}

/// Mean of (s_upper - s_lower) / g; squares with g = 0 are skipped and counted.
inline MetricSummary ri_summary(std::span<const RegionStats> stats) {
  if (stats.empty()) throw ParameterError("RI needs at least one region");
  MetricSummary out;
  double total = 0.0;
  for (const auto& s : stats) {
    if (!(s.g > 0.0)) {
      ++out.excluded;
      continue;
    }
    ++out.used;
    total += s.width() / s.g;
  }
  out.value = out.used ? total / static_cast<double>(out.used) : 0.0;
  return out;
}

inline double ri(std::span<const RegionStats> stats) { return ri_summary(stats).value; }

struct EvalRecord {
  std::string estimator;
  double alpha = 0.0;
  std::size_t scale_index = 0;
  std::size_t side = 0;
  std::size_t n_squares = 0;
  double pep = 0.0;
  double ri = 0.0;
  std::size_t ri_excluded = 0;   // squares with g = 0
  std::size_t pep_excluded = 0;  // squares with g = 0 and zero upper bound
  double mean_width = 0.0;       // mean s_upper - s_lower, before division by g
};

struct EvalCurve {
  std::vector<EvalRecord> records;
};

struct EvalOptions {
  std::string estimator = "estimator";
  PepConvention convention = PepConvention::kOutside;
  Parallelism parallelism{};
};

inline EvalCurve evaluate(const DensityMap& bel, const DensityMap& betp, const DensityMap& pl,
                          const DensityMap& gt, const ScaleSpec& spec, double w,
                          double alpha_label, const EvalOptions& options = {}) {
  check_w(w);
  require_same_shape(betp, gt, "ground truth vs estimate");
  RegionEvaluator evaluator(bel, betp, pl, gt);
  auto scales = enumerate_scales(betp.height(), betp.width(), spec);

  EvalCurve curve;
  curve.records.resize(scales.size());
  parallel_for(scales.size(), options.parallelism, [&](std::size_t begin, std::size_t end) {
    std::vector<RegionStats> stats;
    for (std::size_t k = begin; k < end; ++k) {
      const Scale& scale = scales[k];
      stats.clear();
      stats.reserve(scale.squares.size());
      double width_total = 0.0;
      for (const auto& sq : scale.squares) {
        stats.push_back(evaluator.stats(sq, w));
        width_total += stats.back().width();
      }
      auto p = pep_summary(stats, options.convention);
      auto q = ri_summary(stats);
      EvalRecord& rec = curve.records[k];
      rec.estimator = options.estimator;
      rec.alpha = alpha_label;
      rec.scale_index = scale.index;
      rec.side = scale.side;
      rec.n_squares = scale.squares.size();
      rec.pep = p.value;
      rec.ri = q.value;
      rec.ri_excluded = q.excluded;
      rec.pep_excluded = p.excluded;
      rec.mean_width = width_total / static_cast<double>(scale.squares.size());
    }
  });
  return curve;
}

inline EvalCurve evaluate(const FusionResult& fusion, const DensityMap& gt,
                          const ScaleSpec& spec, double w, double alpha_label,
                          const EvalOptions& options = {}) {
  return evaluate(fusion.bel, fusion.betp, fusion.pl, gt, spec, w, alpha_label, options);
}

}  // namespace evcrowd
