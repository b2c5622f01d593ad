// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file ply.hpp
/// @brief PLY 1.0 point-cloud reader and writer (ascii and
/// binary_little_endian).
///
/// Only the `vertex` element is loaded: x/y/z (float or double) and optional
/// red/green/blue (uchar). Other vertex properties are skipped by size and
/// other elements are ignored. Coordinates are widened to double.

#pragma once

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"

namespace cloud_inspect {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class PlyFormat { Ascii, BinaryLittleEndian };
enum class CoordinateKind { F32, F64 };

enum class PlyScalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
  std::string name;
  PlyScalar kind = PlyScalar::Float32;
};

struct PlyHeader {
  PlyFormat format = PlyFormat::Ascii;
  std::size_t vertex_count = 0;
  bool has_color = false;
  std::vector<PlyProperty> property_order;  // vertex element only
};

struct PlyData {
  PlyHeader header;
  PointCloud cloud;
};

inline const char* to_string(PlyFormat f) {
  return f == PlyFormat::Ascii ? "ascii" : "binary_little_endian";
}

namespace ply_detail {

inline std::optional<PlyScalar> parse_scalar(std::string_view t) {
  if (t == "char" || t == "int8") return PlyScalar::Int8;
  if (t == "uchar" || t == "uint8") return PlyScalar::UInt8;
  if (t == "short" || t == "int16") return PlyScalar::Int16;
  if (t == "ushort" || t == "uint16") return PlyScalar::UInt16;
  if (t == "int" || t == "int32") return PlyScalar::Int32;
  if (t == "uint" || t == "uint32") return PlyScalar::UInt32;
  if (t == "float" || t == "float32") return PlyScalar::Float32;
  if (t == "double" || t == "float64") return PlyScalar::Float64;
  return std::nullopt;
}

inline std::size_t scalar_size(PlyScalar k) {
  switch (k) {
    case PlyScalar::Int8:
    case PlyScalar::UInt8: return 1;
    case PlyScalar::Int16:
    case PlyScalar::UInt16: return 2;
    case PlyScalar::Int32:
    case PlyScalar::UInt32:
    case PlyScalar::Float32: return 4;
    case PlyScalar::Float64: return 8;
  }
  return 0;
}

inline bool is_float(PlyScalar k) {
  return k == PlyScalar::Float32 || k == PlyScalar::Float64;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

struct ElementDecl {
  std::string name;
  std::size_t count = 0;
  // Each property: scalar, or list (count kind + item kind).
  struct Prop {
    std::string name;
    PlyScalar kind = PlyScalar::Float32;
    bool is_list = false;
    PlyScalar list_count = PlyScalar::UInt8;
  };
  std::vector<Prop> props;
};

inline std::size_t parse_count(std::string_view s, std::size_t offset) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw PlyError("invalid element count '" + std::string(s) + "'", offset);
  return v;
}

// Sequential reader over the payload with byte-offset tracking.
class Cursor {
 public:
  Cursor(std::string_view bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  std::string_view raw(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw PlyError("truncated payload", bytes_.size());
    const std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  // Next whitespace-delimited token (ascii payloads).
  std::string_view token() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) throw PlyError("truncated payload", bytes_.size());
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    return bytes_.substr(start, pos_ - start);
  }

 private:
  std::string_view bytes_;
  std::size_t pos_;
};

template <typename T>
T load_le(std::string_view raw) {
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

inline double read_binary_scalar(Cursor& cur, PlyScalar k) {
  const std::string_view r = cur.raw(scalar_size(k));
  switch (k) {
    case PlyScalar::Int8: return load_le<std::int8_t>(r);
    case PlyScalar::UInt8: return load_le<std::uint8_t>(r);
    case PlyScalar::Int16: return load_le<std::int16_t>(r);
    case PlyScalar::UInt16: return load_le<std::uint16_t>(r);
    case PlyScalar::Int32: return load_le<std::int32_t>(r);
    case PlyScalar::UInt32: return load_le<std::uint32_t>(r);
    case PlyScalar::Float32: return load_le<float>(r);
    case PlyScalar::Float64: return load_le<double>(r);
  }
  return 0.0;
}

inline double read_ascii_scalar(Cursor& cur, PlyScalar k) {
  const std::size_t at = cur.pos();
  const std::string_view t = cur.token();
  const char* end = t.data() + t.size();
  if (k == PlyScalar::Float32) {
    float v = 0.0f;
    const auto [p, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || p != end)
      throw PlyError("invalid number '" + std::string(t) + "'", at);
    return v;
  }
  if (k == PlyScalar::Float64) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || p != end)
      throw PlyError("invalid number '" + std::string(t) + "'", at);
    return v;
  }
  long long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || p != end)
    throw PlyError("invalid integer '" + std::string(t) + "'", at);
  return static_cast<double>(v);
}

inline double read_scalar(Cursor& cur, PlyScalar k, PlyFormat f) {
  return f == PlyFormat::Ascii ? read_ascii_scalar(cur, k) : read_binary_scalar(cur, k);
}

inline void skip_element(Cursor& cur, const ElementDecl& e, PlyFormat f) {
  for (std::size_t i = 0; i < e.count; ++i)
    for (const auto& p : e.props) {
      if (!p.is_list) {
        read_scalar(cur, p.kind, f);
        continue;
      }
      const std::size_t at = cur.pos();
      const double n = read_scalar(cur, p.list_count, f);
      if (n < 0) throw PlyError("negative list length", at);
      for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) read_scalar(cur, p.kind, f);
    }
}

}  // namespace ply_detail

/// Parses a whole PLY byte stream.
inline PlyData read_ply_data(std::string_view bytes) {
  using namespace ply_detail;

  // Header: newline-terminated lines up to and including end_header.
  std::size_t pos = 0;
  std::size_t line_start = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size()) throw PlyError("unterminated header", bytes.size());
    line_start = pos;
    const std::size_t nl = bytes.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? bytes.size() : nl;
    pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
    std::string_view line = bytes.substr(line_start, end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  {
    const auto tokens = split_ws(next_line());
    if (tokens.size() != 1 || tokens[0] != "ply") throw PlyError("not a PLY file", 0);
  }

  std::optional<PlyFormat> format;
  std::vector<ElementDecl> elements;
  for (;;) {
    const auto tokens = split_ws(next_line());
    if (tokens.empty()) continue;
    const std::string_view kw = tokens[0];
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (tokens.size() != 3) throw PlyError("malformed format line", line_start);
      if (tokens[2] != "1.0")
        throw PlyError("unsupported format version " + std::string(tokens[2]), line_start);
      if (tokens[1] == "ascii") format = PlyFormat::Ascii;
      else if (tokens[1] == "binary_little_endian") format = PlyFormat::BinaryLittleEndian;
      else throw PlyError("unsupported format " + std::string(tokens[1]), line_start);
      continue;
    }
    if (kw == "element") {
      if (tokens.size() != 3) throw PlyError("malformed element line", line_start);
      elements.push_back({std::string(tokens[1]), parse_count(tokens[2], line_start), {}});
      continue;
    }
    if (kw == "property") {
      if (elements.empty()) throw PlyError("property before any element", line_start);
      ElementDecl::Prop prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        const auto c = parse_scalar(tokens[2]);
        const auto k = parse_scalar(tokens[3]);
        if (!c || !k || is_float(*c)) throw PlyError("invalid list property", line_start);
        prop = {std::string(tokens[4]), *k, true, *c};
      } else if (tokens.size() == 3) {
        const auto k = parse_scalar(tokens[1]);
        if (!k) throw PlyError("unknown property type " + std::string(tokens[1]), line_start);
        prop = {std::string(tokens[2]), *k, false, PlyScalar::UInt8};
      } else {
        throw PlyError("malformed property line", line_start);
      }
      elements.back().props.push_back(prop);
      continue;
    }
    throw PlyError("unexpected header keyword " + std::string(kw), line_start);
  }
  if (!format) throw PlyError("missing format line", pos);

  PlyData data;
  data.header.format = *format;
  Cursor cur(bytes, pos);

  const ElementDecl* vertex = nullptr;
  for (const ElementDecl& e : elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    skip_element(cur, e, *format);
  }
  if (vertex == nullptr) throw PlyError("no vertex element", pos);

  // Locate the recognised columns.
  int col[6] = {-1, -1, -1, -1, -1, -1};
  static constexpr const char* kNames[6] = {"x", "y", "z", "red", "green", "blue"};
  for (std::size_t i = 0; i < vertex->props.size(); ++i) {
    const auto& p = vertex->props[i];
    if (p.is_list) throw PlyError("list-typed vertex property '" + p.name + "'", pos);
    if (p.name == "r" || p.name == "g" || p.name == "b")
      throw PlyError("unsupported color property '" + p.name +
                         "' (expected red/green/blue)", pos);
    data.header.property_order.push_back({p.name, p.kind});
    for (int c = 0; c < 6; ++c)
      if (p.name == kNames[c]) {
        if (col[c] >= 0) throw PlyError("duplicate vertex property '" + p.name + "'", pos);
        col[c] = static_cast<int>(i);
      }
  }
  for (int c = 0; c < 3; ++c) {
    if (col[c] < 0) throw PlyError(std::string("missing vertex property '") + kNames[c] + "'", pos);
    if (!is_float(vertex->props[col[c]].kind))
      throw PlyError(std::string("vertex property '") + kNames[c] + "' must be float or double", pos);
  }
  const int color_cols = (col[3] >= 0) + (col[4] >= 0) + (col[5] >= 0);
  if (color_cols != 0 && color_cols != 3)
    throw PlyError("incomplete red/green/blue properties", pos);
  data.header.has_color = color_cols == 3;
  if (data.header.has_color)
    for (int c = 3; c < 6; ++c)
      if (vertex->props[col[c]].kind != PlyScalar::UInt8)
        throw PlyError(std::string("vertex property '") + kNames[c] + "' must be uchar", pos);

  const std::size_t n = vertex->count;
  data.header.vertex_count = n;
  if (*format == PlyFormat::BinaryLittleEndian) {
    std::size_t stride = 0;
    for (const auto& p : vertex->props) stride += scalar_size(p.kind);
    if ((bytes.size() - cur.pos()) / stride < n) throw PlyError("truncated payload", bytes.size());
  } else {
    // Every ascii value takes at least one character plus a separator.
    const std::size_t remaining = bytes.size() - cur.pos() + 1;
    if (remaining / 2 / vertex->props.size() < n) throw PlyError("truncated payload", bytes.size());
  }

  PointCloud& cloud = data.cloud;
  cloud.points.resize(n);
  if (data.header.has_color) cloud.colors.resize(n);
  std::vector<double> row(vertex->props.size());
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t at = cur.pos();
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = read_scalar(cur, vertex->props[i].kind, *format);
    const Point3 p(row[col[0]], row[col[1]], row[col[2]]);
    if (!is_finite(p)) throw PlyError("invalid coordinate at vertex " + std::to_string(v), at);
    cloud.points[v] = p;
    if (data.header.has_color) {
      for (int c = 3; c < 6; ++c)
        if (row[col[c]] < 0 || row[col[c]] > 255)
          throw PlyError("color out of range at vertex " + std::to_string(v), at);
      cloud.colors[v] = {static_cast<std::uint8_t>(row[col[3]]),
                         static_cast<std::uint8_t>(row[col[4]]),
                         static_cast<std::uint8_t>(row[col[5]])};
    }
  }
  return data;
}

inline PointCloud read_ply(std::string_view bytes) { return read_ply_data(bytes).cloud; }

/// Serializes a cloud. Output is a pure function of the input, so identical
/// clouds give byte-identical files. Ascii values use the shortest
/// round-trip representation of the chosen coordinate kind.
inline std::string write_ply(const PointCloud& cloud, PlyFormat format,
                             CoordinateKind kind = CoordinateKind::F64) {
  if (cloud.has_colors() && cloud.colors.size() != cloud.size())
    throw Error("color count does not match point count");
  const bool f32 = kind == CoordinateKind::F32;
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  const char* type = f32 ? "float" : "double";
  for (const char* axis : {"x", "y", "z"}) out += std::string("property ") + type + " " + axis + "\n";
  if (cloud.has_colors())
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";

  if (format == PlyFormat::Ascii) {
    char buf[64];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const double v = cloud.points[i][a];
        const auto res = f32 ? std::to_chars(buf, buf + sizeof buf, static_cast<float>(v))
                             : std::to_chars(buf, buf + sizeof buf, v);
        if (a > 0) out += ' ';
        out.append(buf, res.ptr);
      }
      if (cloud.has_colors()) {
        const Rgb c = cloud.colors[i];
        out += ' ' + std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' + std::to_string(c.b);
      }
      out += '\n';
    }
    return out;
  }

  const std::size_t stride = (f32 ? 12 : 24) + (cloud.has_colors() ? 3 : 0);
  out.reserve(out.size() + stride * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (f32) {
        const float v = static_cast<float>(cloud.points[i][a]);
        out.append(reinterpret_cast<const char*>(&v), sizeof v);
      } else {
        const double v = cloud.points[i][a];
        out.append(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
    if (cloud.has_colors()) {
      const Rgb c = cloud.colors[i];
      out += static_cast<char>(c.r);
      out += static_cast<char>(c.g);
      out += static_cast<char>(c.b);
    }
  }
  return out;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline PlyData read_ply_file(const std::string& path) {
  return read_ply_data(read_file_bytes(path));
}

inline void write_ply_file(const std::string& path, const PointCloud& cloud,
                           PlyFormat format, CoordinateKind kind = CoordinateKind::F64) {
  const std::string bytes = write_ply(cloud, format, kind);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write '" + path + "'");
}

}  // namespace cloud_inspect
