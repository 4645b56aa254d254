#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcrowd/error.hpp"
#include "evcrowd/file_io.hpp"

namespace evcrowd {

struct HeadPoint {
  double x = 0.0;  // column coordinate, pixel (c, r) covers [c, c+1) x [r, r+1)
  double y = 0.0;  // row coordinate

  friend bool operator==(const HeadPoint&, const HeadPoint&) = default;
};

/// Per-row kernel scale sampled at strictly increasing rows and linearly
/// interpolated in between. Rows outside the sampled range take the nearest
/// sample. An empty table means scale 1 everywhere.
class PerspectiveProfile {
 public:
  PerspectiveProfile() = default;

  PerspectiveProfile(std::vector<double> rows, std::vector<double> scales)
      : rows_(std::move(rows)), scales_(std::move(scales)) {
    if (rows_.size() != scales_.size()) {
      throw SchemaError("perspective 'rows' and 'scale' differ in length (" +
                        std::to_string(rows_.size()) + " vs " + std::to_string(scales_.size()) +
                        ")");
    }
    for (std::size_t i = 1; i < rows_.size(); ++i) {
      if (!(rows_[i] > rows_[i - 1])) {
        throw SchemaError("perspective rows must be strictly increasing (entry " +
                          std::to_string(i) + ")");
      }
    }
    for (std::size_t i = 0; i < scales_.size(); ++i) {
      if (!(scales_[i] > 0.0) || !std::isfinite(scales_[i])) {
        throw SchemaError("perspective scale must be positive (entry " + std::to_string(i) +
                          ")");
      }
    }
  }

  bool is_constant() const noexcept { return rows_.empty(); }
  const std::vector<double>& rows() const noexcept { return rows_; }
  const std::vector<double>& scales() const noexcept { return scales_; }

  double scale_at(double row) const {
    if (rows_.empty()) return 1.0;
    if (row <= rows_.front()) return scales_.front();
    if (row >= rows_.back()) return scales_.back();
    auto hi = static_cast<std::size_t>(std::upper_bound(rows_.begin(), rows_.end(), row) -
                                       rows_.begin());
    std::size_t lo = hi - 1;
    double t = (row - rows_[lo]) / (rows_[hi] - rows_[lo]);
    return scales_[lo] + t * (scales_[hi] - scales_[lo]);
  }

 private:
  std::vector<double> rows_;
  std::vector<double> scales_;
};

struct HeadAnnotations {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<HeadPoint> points;
  PerspectiveProfile perspective;

  void validate() const {
    if (width == 0 || height == 0) {
      throw ShapeError("annotation image size must be non-zero, got " + std::to_string(width) +
                       "x" + std::to_string(height));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!(p.x >= 0.0 && p.x < static_cast<double>(width) && p.y >= 0.0 &&
            p.y < static_cast<double>(height))) {
        throw ValidationError("point " + std::to_string(i) + " (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ") lies outside the " +
                              std::to_string(width) + "x" + std::to_string(height) + " image");
      }
    }
  }
};

inline HeadAnnotations parse_annotations(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("annotations are not valid JSON: ") + e.what());
  }
  HeadAnnotations ann;
  try {
    if (!doc.is_object()) throw SchemaError("annotations must be a JSON object");
    for (const char* key : {"width", "height", "points"}) {
      if (!doc.contains(key)) throw SchemaError(std::string("annotations lack '") + key + "'");
    }
    if (!doc["width"].is_number_integer() || !doc["height"].is_number_integer() ||
        doc["width"].get<long long>() <= 0 || doc["height"].get<long long>() <= 0) {
      throw SchemaError("'width' and 'height' must be positive integers");
    }
    ann.width = doc["width"].get<std::size_t>();
    ann.height = doc["height"].get<std::size_t>();
    const auto& pts = doc["points"];
    if (!pts.is_array()) throw SchemaError("'points' must be an array");
    ann.points.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw SchemaError("point " + std::to_string(i) + " must be a [x, y] number pair");
      }
      ann.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    if (doc.contains("perspective") && !doc["perspective"].is_null()) {
      const auto& persp = doc["perspective"];
      if (!persp.is_object() || !persp.contains("rows") || !persp.contains("scale")) {
        throw SchemaError("'perspective' must hold 'rows' and 'scale' arrays");
      }
      ann.perspective = PerspectiveProfile(persp["rows"].get<std::vector<double>>(),
                                           persp["scale"].get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("annotation field has the wrong type: ") + e.what());
  }
  ann.validate();
  return ann;
}

inline HeadAnnotations read_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_file(path));
}

inline std::string serialize_annotations(const HeadAnnotations& ann) {
  using nlohmann::json;
  json doc;
  doc["width"] = ann.width;
  doc["height"] = ann.height;
  json pts = json::array();
  for (const auto& p : ann.points) pts.push_back({p.x, p.y});
  doc["points"] = std::move(pts);
  if (!ann.perspective.is_constant()) {
    doc["perspective"] = {{"rows", ann.perspective.rows()}, {"scale", ann.perspective.scales()}};
  }
  return doc.dump(2) + "\n";
}

inline void write_annotations(const HeadAnnotations& ann, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_annotations(ann));
}

}  // namespace evcrowd
