#pragma once

// NPY container support: little-endian IEEE-754 float32/float64, C order.
//
// Layout: "\x93NUMPY", major, minor, header length (u16 LE for 1.0, u32 LE
// for 2.0), an ASCII python-literal dict padded with spaces and terminated by
// '\n', then the raw payload.

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evcrowd/error.hpp"
#include "evcrowd/file_io.hpp"
#include "evcrowd/grid.hpp"

namespace evcrowd::npy {

enum class DType { kFloat32, kFloat64 };

struct Array {
  std::vector<std::size_t> shape;
  DType dtype = DType::kFloat64;
  std::vector<double> values;  // widened to double, C order
};

namespace detail {

inline constexpr std::string_view kMagic = "\x93NUMPY";

[[noreturn]] inline void fail(std::size_t offset, const std::string& what) {
  throw FormatError("malformed NPY at byte " + std::to_string(offset) + ": " + what);
}

// Minimal reader for the python-literal header dict.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  Array parse() {
    std::optional<DType> dtype;
    std::optional<bool> fortran;
    std::optional<std::vector<std::size_t>> shape;

    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        std::size_t at = pos_;
        std::string descr = parse_string();
        if (descr == "<f8") {
          dtype = DType::kFloat64;
        } else if (descr == "<f4") {
          dtype = DType::kFloat32;
        } else {
          fail(base_ + at, "unsupported descr '" + descr + "' (expected '<f4' or '<f8')");
        }
      } else if (key == "fortran_order") {
        fortran = parse_bool();
      } else if (key == "shape") {
        shape = parse_shape();
      } else {
        fail(base_ + pos_, "unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail(base_ + pos_, "expected ',' or '}' in header dict");
      }
    }
    if (!dtype) fail(base_ + pos_, "header lacks 'descr'");
    if (!fortran) fail(base_ + pos_, "header lacks 'fortran_order'");
    if (!shape) fail(base_ + pos_, "header lacks 'shape'");
    if (*fortran) fail(base_, "fortran_order arrays are not supported");
    Array out;
    out.dtype = *dtype;
    out.shape = std::move(*shape);
    return out;
  }

 private:
  char peek() const {
    if (pos_ >= text_.size()) fail(base_ + pos_, "header ended unexpectedly");
    return text_[pos_];
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(base_ + pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    char quote = peek();
    if (quote != '\'' && quote != '"') fail(base_ + pos_, "expected quoted string");
    ++pos_;
    std::size_t end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail(base_ + pos_, "unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail(base_ + pos_, "expected True or False");
  }

  std::vector<std::size_t> parse_shape() {
    std::vector<std::size_t> dims;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail(base_ + pos_, "expected non-negative integer in shape");
      }
      std::size_t v = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        v = v * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline std::uint64_t load_le(const char* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

inline void store_le(std::string& out, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::string format_index(const std::vector<std::size_t>& shape, std::size_t flat) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t d = shape.size(); d-- > 0;) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  std::string s = "(";
  for (std::size_t d = 0; d < idx.size(); ++d) {
    if (d) s += ", ";
    s += std::to_string(idx[d]);
  }
  return s + ")";
}

}  // namespace detail

/// Parses an in-memory NPY container.
inline Array parse(std::string_view bytes) {
  using detail::fail;
  if (bytes.size() < 10) fail(bytes.size(), "file shorter than the fixed preamble");
  if (bytes.substr(0, 6) != detail::kMagic) fail(0, "bad magic string");
  auto major = static_cast<unsigned char>(bytes[6]);
  auto minor = static_cast<unsigned char>(bytes[7]);
  if (minor != 0 || (major != 1 && major != 2)) {
    fail(6, "unsupported version " + std::to_string(major) + "." + std::to_string(minor));
  }
  std::size_t len_bytes = major == 1 ? 2 : 4;
  std::size_t header_start = 8 + len_bytes;
  if (bytes.size() < header_start) fail(bytes.size(), "truncated header length");
  auto header_len = static_cast<std::size_t>(detail::load_le(bytes.data() + 8, len_bytes));
  if (bytes.size() < header_start + header_len) {
    fail(bytes.size(), "header length " + std::to_string(header_len) + " exceeds file size");
  }
  std::string_view header = bytes.substr(header_start, header_len);
  Array out = detail::HeaderParser(header, header_start).parse();

  std::size_t count = 1;
  for (auto d : out.shape) count *= d;
  std::size_t item = out.dtype == DType::kFloat64 ? 8 : 4;
  std::size_t data_start = header_start + header_len;
  if (bytes.size() - data_start != count * item) {
    fail(data_start, "payload holds " + std::to_string(bytes.size() - data_start) +
                         " bytes, shape requires " + std::to_string(count * item));
  }
  out.values.resize(count);
  const char* p = bytes.data() + data_start;
  for (std::size_t i = 0; i < count; ++i, p += item) {
    if (out.dtype == DType::kFloat64) {
      out.values[i] = std::bit_cast<double>(detail::load_le(p, 8));
    } else {
      out.values[i] = static_cast<double>(
          std::bit_cast<float>(static_cast<std::uint32_t>(detail::load_le(p, 4))));
    }
  }
  return out;
}

/// Serializes values as an NPY 1.0 '<f8' C-order container.
inline std::string serialize(const std::vector<std::size_t>& shape,
                             std::span<const double> values) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  if (count != values.size()) {
    throw ShapeError("NPY shape requires " + std::to_string(count) + " values, got " +
                     std::to_string(values.size()));
  }
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t d = 0; d < shape.size(); ++d) {
    dict += std::to_string(shape[d]);
    if (shape.size() == 1 || d + 1 < shape.size()) dict += ",";
    if (d + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // Preamble + dict + padding + '\n' is a multiple of 64 bytes.
  std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');

  std::string out(detail::kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  detail::store_le(out, dict.size(), 2);
  out += dict;
  out.reserve(out.size() + values.size() * 8);
  for (double v : values) detail::store_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

}  // namespace evcrowd::npy

namespace evcrowd {

using ArrayPayload = std::variant<DensityMap, RealizationStack>;

struct IngestReport {
  std::size_t clamped = 0;  // realization values pulled back into [0,1]
};

/// Converts a decoded NPY array into a DensityMap (rank 2) or a clamped
/// RealizationStack (rank 3).
inline ArrayPayload to_payload(npy::Array array, IngestReport* report = nullptr) {
  const auto& shape = array.shape;
  if (shape.size() != 2 && shape.size() != 3) {
    throw RankError("expected a rank-2 or rank-3 array, got rank " +
                    std::to_string(shape.size()));
  }
  for (std::size_t i = 0; i < array.values.size(); ++i) {
    if (!std::isfinite(array.values[i])) {
      throw DataError("non-finite value at index " + npy::detail::format_index(shape, i));
    }
  }
  if (shape.size() == 2) {
    for (std::size_t i = 0; i < array.values.size(); ++i) {
      if (array.values[i] < 0.0) {
        throw DataError("negative density at index " + npy::detail::format_index(shape, i));
      }
    }
    return DensityMap(shape[0], shape[1], std::move(array.values));
  }
  auto [stack, clamped] =
      RealizationStack::clamped(shape[0], shape[1], shape[2], std::move(array.values));
  if (report) report->clamped = clamped;
  return std::move(stack);
}

inline ArrayPayload read_array(const std::filesystem::path& path,
                               IngestReport* report = nullptr) {
  std::string bytes = read_file(path);
  try {
    return to_payload(npy::parse(bytes), report);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) {
      throw FormatError(path.string() + ": " + e.what());
    }
    throw;
  }
}

/// Reads a rank-2 array, rejecting stacks.
inline DensityMap read_density_map(const std::filesystem::path& path) {
  auto payload = read_array(path);
  if (auto* m = std::get_if<DensityMap>(&payload)) return std::move(*m);
  throw RankError(path.string() + ": expected a rank-2 density map, got a rank-3 stack");
}

/// Reads a rank-3 array, rejecting single maps.
inline RealizationStack read_stack(const std::filesystem::path& path,
                                   IngestReport* report = nullptr) {
  auto payload = read_array(path, report);
  if (auto* s = std::get_if<RealizationStack>(&payload)) return std::move(*s);
  throw RankError(path.string() + ": expected a rank-3 realization stack, got a rank-2 map");
}

inline std::string encode_array(const DensityMap& map) {
  return npy::serialize({map.height(), map.width()}, map.values());
}

inline std::string encode_array(const RealizationStack& stack) {
  return npy::serialize({stack.sources(), stack.height(), stack.width()}, stack.values());
}

inline void write_array(const DensityMap& map, const std::filesystem::path& path) {
  write_file_atomic(path, encode_array(map));
}

inline void write_array(const RealizationStack& stack, const std::filesystem::path& path) {
  write_file_atomic(path, encode_array(stack));
}

}  // namespace evcrowd
