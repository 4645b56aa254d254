#pragma once

// Command-line front end. run() is the whole program; tools/evcrowd.cpp only
// forwards argv.
//
// Exit codes: 0 success, 2 invalid flags or parameters, 3 I/O or malformed
// files, 4 numeric or contract violations (shape mismatch, total conflict,
// degenerate calibration, ...).

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evcrowd/annotations.hpp"
#include "evcrowd/error.hpp"
#include "evcrowd/evidential.hpp"
#include "evcrowd/file_io.hpp"
#include "evcrowd/groundtruth.hpp"
#include "evcrowd/multiscale.hpp"
#include "evcrowd/npy.hpp"
#include "evcrowd/report.hpp"
#include "evcrowd/synth.hpp"

namespace evcrowd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitContract = 4;

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter: return kExitUsage;
    case ErrorKind::kIo:
    case ErrorKind::kFormat: return kExitIo;
    case ErrorKind::kData:
    case ErrorKind::kShape:
    case ErrorKind::kNumeric: return kExitContract;
  }
  return kExitContract;
}

/// Defaults shared by every subcommand; a --config JSON file may override them.
struct RunConfig {
  std::vector<double> alpha{0.8};
  double delta = 1.1;
  std::size_t sources = 10;
  double stride_fraction = 0.25;
  std::size_t min_side = 16;
  std::size_t max_scales = 1000;
  double w = 1.0;
  double sigma = 3.0;
  double trunc = 4.0;
  unsigned threads = 1;

  void apply_json(const nlohmann::json& doc) {
    try {
      if (!doc.is_object()) throw SchemaError("config must be a JSON object");
      for (const auto& [key, value] : doc.items()) {
        if (key == "alpha") {
          alpha = value.is_array() ? value.get<std::vector<double>>()
                                   : std::vector<double>{value.get<double>()};
        } else if (key == "delta") {
          delta = value.get<double>();
        } else if (key == "T" || key == "t") {
          sources = value.get<std::size_t>();
        } else if (key == "stride_fraction") {
          stride_fraction = value.get<double>();
        } else if (key == "min_side") {
          min_side = value.get<std::size_t>();
        } else if (key == "max_scales") {
          max_scales = value.get<std::size_t>();
        } else if (key == "w") {
          w = value.get<double>();
        } else if (key == "sigma") {
          sigma = value.get<double>();
        } else if (key == "trunc") {
          trunc = value.get<double>();
        } else if (key == "threads") {
          threads = value.get<unsigned>();
        } else {
          throw SchemaError("unknown config key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("config value has the wrong type: ") + e.what());
    }
  }
};

namespace detail {

inline std::vector<double> parse_alpha_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw ParameterError("--alpha: '" + item + "' is not a number");
    }
    if (used != item.size()) throw ParameterError("--alpha: '" + item + "' is not a number");
    check_alpha(v);
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("--alpha needs at least one value");
  return out;
}

inline std::string alpha_tag(double alpha) { return "alpha" + evcrowd::detail::fmt_real(alpha, 6); }

inline void ensure_parent(const std::filesystem::path& path) {
  auto parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

inline std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

/// Pre-scans argv for --config so the file can seed flag defaults.
inline std::optional<std::string> find_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return std::nullopt;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    if (auto path = detail::find_config(argc, argv)) {
      cfg.apply_json(nlohmann::json::parse(read_file(*path)));
    }
  } catch (const nlohmann::json::exception& e) {
    err << "error: config is not valid JSON: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }

  CLI::App app{"evcrowd: evidential fusion of density-map ensembles and multiscale "
               "count-interval evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file overriding defaults (keys: alpha, delta, T, stride_fraction, "
                 "min_side, max_scales, w, sigma, trunc, threads)");
  app.add_option("--threads", cfg.threads,
                 "Worker threads for pixel- and scale-parallel loops (0 = all cores); "
                 "results do not depend on it")
      ->capture_default_str();

  std::string alpha_text;
  {
    std::ostringstream s;
    for (std::size_t i = 0; i < cfg.alpha.size(); ++i) s << (i ? "," : "") << cfg.alpha[i];
    alpha_text = s.str();
  }

  // gt
  auto* gt_cmd = app.add_subcommand("gt", "Render a ground-truth density map from head annotations");
  std::string gt_ann, gt_out;
  gt_cmd->add_option("--annotations", gt_ann, "Annotation JSON (width, height, points, optional perspective)")
      ->required();
  gt_cmd->add_option("--sigma", cfg.sigma, "Base Gaussian bandwidth in pixels, scaled by the perspective profile")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gt_cmd->add_option("--trunc", cfg.trunc, "Kernel support radius in multiples of sigma (>= 3)")
      ->capture_default_str()
      ->check(CLI::Range(3.0, 1e9));
  gt_cmd->add_option("--out", gt_out, "Output NPY (H, W) float64")->required();

  // fuse
  auto* fuse_cmd = app.add_subcommand(
      "fuse", "Fuse a (T, H, W) realization stack into BetP, Bel, Pl, ignorance and conflict maps");
  std::string fuse_stack, fuse_prefix;
  fuse_cmd->add_option("--stack", fuse_stack, "Realization stack NPY (T, H, W), values clamped to [0,1]")
      ->required();
  fuse_cmd->add_option("--alpha", alpha_text,
                       "Discounting scale in [0,1]; a comma-separated list runs a sweep, one "
                       "output set per value under <prefix>alpha<value>/")
      ->capture_default_str();
  fuse_cmd->add_option("--out-prefix", fuse_prefix,
                       "Prefix for betp.npy, bel.npy, pl.npy, theta.npy, conflict.npy")
      ->required();

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "Per-scale PEP and RI of count intervals against a ground-truth map");
  std::string ev_betp, ev_bel, ev_pl, ev_gt, ev_stack, ev_out, ev_estimator = "estimator";
  double alpha_label = cfg.alpha.front();
  bool pep_as_printed = false;
  bool calibrate_in_place = false;
  eval_cmd->add_option("--betp", ev_betp, "BetP(H) map NPY");
  eval_cmd->add_option("--bel", ev_bel, "Bel(H) map NPY (lower bound layer)");
  eval_cmd->add_option("--pl", ev_pl, "Pl(H) map NPY (upper bound layer)");
  eval_cmd->add_option("--stack", ev_stack,
                       "Realization stack NPY; fused in-process for every --alpha value "
                       "instead of reading --betp/--bel/--pl");
  eval_cmd->add_option("--alpha", alpha_text, "Discounting scale(s) used with --stack")
      ->capture_default_str();
  eval_cmd->add_option("--gt", ev_gt, "Ground-truth density NPY")->required();
  eval_cmd->add_option("--delta", cfg.delta, "Scale factor between consecutive square sides (> 1)")
      ->capture_default_str();
  eval_cmd->add_option("--stride-frac", cfg.stride_fraction,
                       "Square placement stride as a fraction of the side, in (0,1]")
      ->capture_default_str();
  eval_cmd->add_option("--min-side", cfg.min_side, "Smallest square side in pixels")
      ->capture_default_str();
  eval_cmd->add_option("--max-scales", cfg.max_scales, "Maximum number of scales")
      ->capture_default_str();
  eval_cmd->add_option("--w", cfg.w, "Count factor applied to summed Bel/BetP/Pl (> 0)")
      ->capture_default_str();
  eval_cmd->add_flag("--calibrate-w", calibrate_in_place,
                     "Replace --w by the least-squares factor fitted on the evaluated squares");
  eval_cmd->add_option("--alpha-label", alpha_label,
                       "Alpha value written to the curve when reading precomputed maps")
      ->capture_default_str();
  eval_cmd->add_option("--estimator", ev_estimator, "Estimator name written to the curve")
      ->capture_default_str();
  eval_cmd->add_flag("--pep-as-printed", pep_as_printed,
                     "Report the fraction of squares whose count lies inside the interval "
                     "instead of outside");
  eval_cmd->add_option("--out", ev_out, "Output curve CSV")->required();

  // calibrate
  auto* cal_cmd = app.add_subcommand(
      "calibrate", "Least-squares count factor w from validation BetP maps and ground truth");
  std::vector<std::string> cal_betp, cal_gt;
  std::string cal_out;
  cal_cmd->add_option("--betp", cal_betp, "BetP map NPY files (repeat or comma-separate)")->required();
  cal_cmd->add_option("--gt", cal_gt, "Matching ground-truth NPY files, same order")->required();
  cal_cmd->add_option("--delta", cfg.delta, "Scale factor of the calibration squares")
      ->capture_default_str();
  cal_cmd->add_option("--stride-frac", cfg.stride_fraction, "Square stride fraction")
      ->capture_default_str();
  cal_cmd->add_option("--min-side", cfg.min_side, "Smallest square side")->capture_default_str();
  cal_cmd->add_option("--out", cal_out, "Optional JSON output {\"w\": value}");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Deterministic synthetic scenes and ensembles");
  synth_cmd->require_subcommand(1);
  auto* scene_cmd = synth_cmd->add_subcommand("scene", "Random head annotations with minimum spacing");
  std::size_t sc_n = 50, sc_w = 256, sc_h = 256;
  double sc_spacing = 8.0;
  std::uint64_t seed = 7;
  std::string sc_out;
  scene_cmd->add_option("--n", sc_n, "Number of heads")->capture_default_str();
  scene_cmd->add_option("--width", sc_w, "Image width")->capture_default_str();
  scene_cmd->add_option("--height", sc_h, "Image height")->capture_default_str();
  scene_cmd->add_option("--spacing", sc_spacing, "Minimum distance between heads in pixels")
      ->capture_default_str();
  scene_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
  scene_cmd->add_option("--out", sc_out, "Output annotation JSON")->required();

  auto* stack_cmd = synth_cmd->add_subcommand("stack", "Noisy realization stack from a ground-truth map");
  std::string st_gt, st_out;
  NoiseModel noise;
  noise.gaussian_sigma = 0.05;
  stack_cmd->add_option("--gt", st_gt, "Ground-truth density NPY")->required();
  stack_cmd->add_option("--t", cfg.sources, "Number of realizations T")->capture_default_str();
  stack_cmd->add_option("--noise-sigma", noise.gaussian_sigma, "Additive Gaussian noise sigma")
      ->capture_default_str();
  stack_cmd->add_option("--blur", noise.blur_sigma, "Gaussian blur sigma in pixels")->capture_default_str();
  stack_cmd->add_option("--bias", noise.bias, "Multiplicative bias, values scale by (1 + bias)")
      ->capture_default_str();
  stack_cmd->add_option("--gain", noise.gain, "Density-to-likelihood gain")->capture_default_str();
  stack_cmd->add_option("--outliers", noise.outlier_sources, "Number of corrupted sources (< T)")
      ->capture_default_str();
  stack_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
  stack_cmd->add_option("--out", st_out, "Output stack NPY (T, H, W)")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Merge curve CSVs into an RI-vs-PEP SVG scatter");
  std::vector<std::string> rp_curves;
  std::string rp_out, rp_title = "RI vs PEP";
  report_cmd->add_option("--curve", rp_curves, "Curve CSV files (repeat or comma-separate)")->required();
  report_cmd->add_option("--title", rp_title, "Plot title")->capture_default_str();
  report_cmd->add_option("--out", rp_out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  auto log = [&](const std::string& msg) { err << msg << "\n"; };
  Parallelism par{cfg.threads};

  try {
    if (*gt_cmd) {
      GaussianSpec spec{cfg.sigma, cfg.trunc};
      spec.validate();
      auto ann = read_annotations(gt_ann);
      GroundTruthReport report;
      auto map = build_density_map(ann, spec, &report);
      if (report.clipped_kernels) {
        log("note: " + std::to_string(report.clipped_kernels) +
            " kernels clipped at the image border and renormalized");
      }
      detail::ensure_parent(gt_out);
      write_array(map, gt_out);
      return kExitOk;
    }

    if (*fuse_cmd) {
      auto alphas = detail::parse_alpha_list(alpha_text);
      IngestReport ingest;
      auto stack = read_stack(fuse_stack, &ingest);
      if (ingest.clamped) log("note: clamped " + std::to_string(ingest.clamped) + " values into [0,1]");
      StagedOutputs staged;
      for (double alpha : alphas) {
        auto fusion = fuse_ensemble(stack, alpha, par);
        std::string prefix = fuse_prefix;
        if (alphas.size() > 1) prefix += detail::alpha_tag(alpha) + "/";
        detail::ensure_parent(prefix + "betp.npy");
        staged.add(prefix + "betp.npy", encode_array(fusion.betp));
        staged.add(prefix + "bel.npy", encode_array(fusion.bel));
        staged.add(prefix + "pl.npy", encode_array(fusion.pl));
        staged.add(prefix + "theta.npy", encode_array(fusion.ignorance));
        staged.add(prefix + "conflict.npy", encode_array(fusion.conflict));
      }
      staged.commit();
      return kExitOk;
    }

    if (*eval_cmd) {
      ScaleSpec spec{cfg.delta, cfg.stride_fraction, cfg.min_side, cfg.max_scales};
      spec.validate();
      check_w(cfg.w);
      const bool from_stack = !ev_stack.empty();
      if (from_stack == (!ev_betp.empty() || !ev_bel.empty() || !ev_pl.empty())) {
        throw ParameterError("eval needs either --stack or all of --betp, --bel and --pl");
      }
      if (!from_stack && (ev_betp.empty() || ev_bel.empty() || ev_pl.empty())) {
        throw ParameterError("eval needs all of --betp, --bel and --pl");
      }
      std::vector<double> alphas =
          from_stack ? detail::parse_alpha_list(alpha_text) : std::vector<double>{alpha_label};

      EvalOptions options;
      options.estimator = ev_estimator;
      options.convention = pep_as_printed ? PepConvention::kAsPrinted : PepConvention::kOutside;
      options.parallelism = par;

      auto gt = read_density_map(ev_gt);
      auto run_one = [&](const DensityMap& bel, const DensityMap& betp, const DensityMap& pl,
                         double alpha, std::vector<EvalRecord>& records) {
        require_same_shape(betp, gt, "eval: BetP vs ground truth");
        require_same_shape(bel, gt, "eval: Bel vs ground truth");
        require_same_shape(pl, gt, "eval: Pl vs ground truth");
        double w = cfg.w;
        if (calibrate_in_place) {
          std::vector<Rect> regions;
          for (auto& s : enumerate_scales(gt.height(), gt.width(), spec)) {
            regions.insert(regions.end(), s.squares.begin(), s.squares.end());
          }
          w = calibrate_w(std::span<const DensityMap>(&betp, 1), std::span<const DensityMap>(&gt, 1),
                          regions);
          log("note: calibrated w = " + evcrowd::detail::fmt_real(w) + " for alpha " +
              evcrowd::detail::fmt_real(alpha, 6));
        }
        auto curve = evaluate(bel, betp, pl, gt, spec, w, alpha, options);
        for (auto& r : curve.records) {
          if (r.ri_excluded) {
            log("warning: scale " + std::to_string(r.scale_index) + ": " +
                std::to_string(r.ri_excluded) + " squares with zero ground truth left out of RI");
          }
          records.push_back(std::move(r));
        }
      };

      std::vector<EvalRecord> records;
      if (from_stack) {
        IngestReport ingest;
        auto stack = read_stack(ev_stack, &ingest);
        if (ingest.clamped) log("note: clamped " + std::to_string(ingest.clamped) + " values into [0,1]");
        for (double alpha : alphas) {
          auto fusion = fuse_ensemble(stack, alpha, par);
          run_one(fusion.bel, fusion.betp, fusion.pl, alpha, records);
        }
      } else {
        auto betp = read_density_map(ev_betp);
        auto bel = read_density_map(ev_bel);
        auto pl = read_density_map(ev_pl);
        run_one(bel, betp, pl, alpha_label, records);
      }
      detail::ensure_parent(ev_out);
      write_file_atomic(ev_out, format_curve_csv(records));
      return kExitOk;
    }

    if (*cal_cmd) {
      ScaleSpec spec{cfg.delta, cfg.stride_fraction, cfg.min_side, cfg.max_scales};
      spec.validate();
      auto betp_paths = detail::split_list(cal_betp);
      auto gt_paths = detail::split_list(cal_gt);
      if (betp_paths.size() != gt_paths.size()) {
        throw ParameterError("calibrate needs as many --gt files as --betp files");
      }
      std::vector<DensityMap> betps, gts;
      for (std::size_t k = 0; k < betp_paths.size(); ++k) {
        betps.push_back(read_density_map(betp_paths[k]));
        gts.push_back(read_density_map(gt_paths[k]));
        require_same_shape(betps.back(), gts.back(), "calibrate");
        require_same_shape(betps.front(), betps.back(), "calibrate (all maps share one size)");
      }
      std::vector<Rect> regions;
      for (auto& s : enumerate_scales(betps[0].height(), betps[0].width(), spec)) {
        regions.insert(regions.end(), s.squares.begin(), s.squares.end());
      }
      double w = calibrate_w(betps, gts, regions);
      out << evcrowd::detail::fmt_real(w, 12) << "\n";
      if (!cal_out.empty()) {
        detail::ensure_parent(cal_out);
        write_file_atomic(cal_out, nlohmann::json{{"w", w}}.dump() + "\n");
      }
      return kExitOk;
    }

    if (*scene_cmd) {
      auto ann = generate_scene(sc_w, sc_h, sc_n, sc_spacing, seed);
      detail::ensure_parent(sc_out);
      write_annotations(ann, sc_out);
      return kExitOk;
    }

    if (*stack_cmd) {
      if (cfg.sources == 0) throw ParameterError("--t must be at least 1");
      noise.seed = seed;
      auto gt = read_density_map(st_gt);
      auto synth = generate_realizations(gt, cfg.sources, noise);
      detail::ensure_parent(st_out);
      write_array(synth.stack, st_out);
      if (!synth.outliers.empty()) {
        std::string list;
        for (auto t : synth.outliers) list += (list.empty() ? "" : ",") + std::to_string(t);
        log("note: corrupted sources: " + list);
      }
      return kExitOk;
    }

    if (*report_cmd) {
      std::vector<EvalRecord> records;
      for (const auto& path : detail::split_list(rp_curves)) {
        auto part = parse_curve_csv(read_file(path));
        records.insert(records.end(), part.begin(), part.end());
      }
      if (records.empty()) throw DataError("no curve records to plot");
      detail::ensure_parent(rp_out);
      write_file_atomic(rp_out, render_svg(records, rp_title));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitUsage;
}

}  // namespace evcrowd::cli
