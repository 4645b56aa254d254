#pragma once

// curve.csv reading/writing and the RI-vs-PEP SVG scatter.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evcrowd/error.hpp"
#include "evcrowd/multiscale.hpp"

namespace evcrowd {

inline constexpr std::string_view kCurveHeader =
    "estimator,alpha,scale_index,side_px,n_squares,pep,ri";

namespace detail {

inline std::string fmt_real(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw FormatError("curve CSV line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string format_curve_csv(std::span<const EvalRecord> records) {
  std::string out(kCurveHeader);
  out += '\n';
  for (const auto& r : records) {
    out += detail::csv_field(r.estimator) + ',' + detail::fmt_real(r.alpha, 6) + ',' +
           std::to_string(r.scale_index) + ',' + std::to_string(r.side) + ',' +
           std::to_string(r.n_squares) + ',' + detail::fmt_real(r.pep) + ',' +
           detail::fmt_real(r.ri) + '\n';
  }
  return out;
}

inline std::vector<EvalRecord> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<EvalRecord> out;
  if (!std::getline(in, line)) throw FormatError("curve CSV is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader) {
    throw FormatError("curve CSV header must be '" + std::string(kCurveHeader) + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line, line_no);
    if (f.size() != 7) {
      throw FormatError("curve CSV line " + std::to_string(line_no) + ": expected 7 fields, got " +
                        std::to_string(f.size()));
    }
    try {
      EvalRecord r;
      r.estimator = f[0];
      r.alpha = std::stod(f[1]);
      r.scale_index = std::stoul(f[2]);
      r.side = std::stoul(f[3]);
      r.n_squares = std::stoul(f[4]);
      r.pep = std::stod(f[5]);
      r.ri = std::stod(f[6]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError("curve CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

/// RI (y) against PEP (x); one color per estimator, one connected cluster
/// per (estimator, alpha) with one dot per scale.
inline std::string render_svg(std::span<const EvalRecord> records,
                              const std::string& title = "RI vs PEP") {
  constexpr double kW = 720, kH = 480, kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  double ri_max = 0.0;
  for (const auto& r : records) {
    if (std::isfinite(r.ri)) ri_max = std::max(ri_max, r.ri);
  }
  ri_max = ri_max > 0.0 ? ri_max * 1.05 : 1.0;

  auto px = [&](double pep) { return kLeft + std::clamp(pep, 0.0, 1.0) * plot_w; };
  auto py = [&](double ri) { return kTop + plot_h - std::clamp(ri / ri_max, 0.0, 1.0) * plot_h; };
  using detail::fmt_real;

  std::vector<std::string> estimators;
  std::map<std::pair<std::string, double>, std::vector<const EvalRecord*>> clusters;
  for (const auto& r : records) {
    if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end()) {
      estimators.push_back(r.estimator);
    }
    clusters[{r.estimator, r.alpha}].push_back(&r);
  }
  auto color_of = [&](const std::string& e) {
    auto i = static_cast<std::size_t>(std::find(estimators.begin(), estimators.end(), e) -
                                      estimators.begin());
    return kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::xml_escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 10; k += 2) {
    double v = k / 10.0;
    svg << "<line x1=\"" << px(v) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << px(v)
        << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>"
        << "<text x=\"" << px(v) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt_real(v, 2) << "</text>\n";
    double rv = ri_max * v;
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(rv) << "\" x2=\"" << kLeft
        << "\" y2=\"" << py(rv) << "\" stroke=\"black\"/>"
        << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(rv) + 4 << "\" text-anchor=\"end\">"
        << fmt_real(rv, 3) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\">PEP</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">RI</text>\n";

  for (const auto& [key, pts] : clusters) {
    const char* color = color_of(key.first);
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end(),
              [](const EvalRecord* a, const EvalRecord* b) { return a->scale_index < b->scale_index; });
    svg << "<g class=\"cluster\" data-estimator=\"" << detail::xml_escape(key.first)
        << "\" data-alpha=\"" << fmt_real(key.second, 6) << "\">\n";
    if (sorted.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.4\" points=\"";
      for (const auto* r : sorted) svg << px(r->pep) << ',' << py(r->ri) << ' ';
      svg << "\"/>\n";
    }
    for (const auto* r : sorted) {
      // Larger dots for larger squares.
      double radius = 2.0 + 4.0 / static_cast<double>(r->scale_index);
      svg << "<circle cx=\"" << px(r->pep) << "\" cy=\"" << py(r->ri) << "\" r=\"" << radius
          << "\" fill=\"" << color << "\"><title>" << detail::xml_escape(r->estimator)
          << " alpha=" << fmt_real(r->alpha, 6) << " side=" << r->side << " pep="
          << fmt_real(r->pep, 4) << " ri=" << fmt_real(r->ri, 4) << "</title></circle>\n";
    }
    const auto* first = sorted.front();
    svg << "<text x=\"" << px(first->pep) + 6 << "\" y=\"" << py(first->ri) - 6 << "\" fill=\""
        << color << "\" font-size=\"10\">&#945;=" << fmt_real(key.second, 3) << "</text>\n";
    svg << "</g>\n";
  }

  double ly = kTop + 10;
  for (const auto& e : estimators) {
    svg << "<circle cx=\"" << kW - kRight + 20 << "\" cy=\"" << ly << "\" r=\"5\" fill=\""
        << color_of(e) << "\"/><text x=\"" << kW - kRight + 30 << "\" y=\"" << ly + 4 << "\">"
        << detail::xml_escape(e) << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace evcrowd
