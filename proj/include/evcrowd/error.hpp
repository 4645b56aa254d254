#pragma once

#include <stdexcept>
#include <string>

namespace evcrowd {

/// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorKind {
  kParameter,  // bad argument value (alpha out of range, empty list, ...)
  kIo,         // file could not be opened, read, written or renamed
  kFormat,     // malformed container (NPY header, JSON schema)
  kData,       // payload content violates an invariant (non-finite, out of bounds)
  kShape,      // dimension mismatch or degenerate dimensions
  kNumeric,    // singular pixel, degenerate calibration, infeasible packing
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& what) : Error(ErrorKind::kParameter, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};

/// NPY payload rank other than 2 or 3.
struct RankError : FormatError {
  explicit RankError(const std::string& what) : FormatError(what) {}
};

/// Non-monotone perspective rows, missing keys, wrong JSON types.
struct SchemaError : FormatError {
  explicit SchemaError(const std::string& what) : FormatError(what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Annotation point outside the image.
struct ValidationError : DataError {
  explicit ValidationError(const std::string& what) : DataError(what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

/// Rectangle not fully inside the image.
struct BoundsError : ShapeError {
  explicit BoundsError(const std::string& what) : ShapeError(what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

/// A pixel whose combined mass is entirely conflict, so normalization is undefined.
struct SingularPixelError : NumericError {
  SingularPixelError(std::size_t row, std::size_t col)
      : NumericError("total conflict at pixel (row " + std::to_string(row) + ", col " +
                     std::to_string(col) + "): 1 - m(empty) is zero"),
        row(row),
        col(col) {}
  std::size_t row;
  std::size_t col;
};

struct CalibrationError : NumericError {
  explicit CalibrationError(const std::string& what) : NumericError(what) {}
};

struct PackingError : NumericError {
  explicit PackingError(const std::string& what) : NumericError(what) {}
};

}  // namespace evcrowd
