// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Dense-array file format shared by every tool.
//!
//!   bytes 0..3   magic "LZU0"
//!   bytes 4..7   u32 rank
//!   next 4*rank  u32 dims, outermost first
//!   payload      prod(dims) float32 values, row-major
//!
//! All integers and floats are little-endian. A rank-2 array therefore has a
//! 16-byte header.

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/grad.hpp>
#include <lzu/zoom.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace lzu {

struct DenseArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated dense-array header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline constexpr char kDenseMagic[4] = {'L', 'Z', 'U', '0'};
inline constexpr std::uint32_t kMaxRank = 8;

inline void write_dense(std::ostream& out, const DenseArray& a) {
  if (a.dims.empty() || a.dims.size() > kMaxRank) throw InvalidArgument("dense array rank must be 1..8");
  if (a.data.size() != a.element_count()) throw InvalidArgument("dense array payload does not match dims");
  out.write(kDenseMagic, 4);
  detail::put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
  for (auto d : a.dims) detail::put_u32(out, d);
  for (float f : a.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  if (!out) throw Error("failed to write dense array");
}

inline DenseArray read_dense(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kDenseMagic, 4) != 0) {
    throw ValidationError("not a dense-array file (bad magic)");
  }
  DenseArray a;
  const std::uint32_t rank = detail::get_u32(in);
  if (rank == 0 || rank > kMaxRank) throw ValidationError("dense array rank out of range");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = detail::get_u32(in);
    if (d == 0) throw ValidationError("dense array has a zero dimension");
    if (count > (std::size_t{1} << 34) / d) throw ValidationError("dense array too large");
    count *= d;
    a.dims.push_back(d);
  }
  a.data.resize(count);
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError("truncated dense-array payload");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* b = raw.data() + 4 * i;
    const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                            (static_cast<std::uint32_t>(b[2]) << 16) |
                            (static_cast<std::uint32_t>(b[3]) << 24);
    a.data[i] = std::bit_cast<float>(u);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after dense-array payload");
  return a;
}

inline void save_dense(const std::filesystem::path& path, const DenseArray& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_dense(out, a);
}

inline DenseArray load_dense(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_dense(in);
}

// ---------------------------------------------------------------------------
// Typed wrappers

/// Saliency maps: rank 2 (rows, cols).
inline DenseArray to_dense(const SaliencyMap& s) {
  DenseArray a{{static_cast<std::uint32_t>(s.rows()), static_cast<std::uint32_t>(s.cols())}, {}};
  a.data.reserve(s.values().size());
  for (double v : s.values()) a.data.push_back(static_cast<float>(v));
  return a;
}

inline SaliencyMap saliency_from_dense(const DenseArray& a) {
  if (a.dims.size() != 2) throw ValidationError("saliency file must be rank 2");
  std::vector<double> v(a.data.begin(), a.data.end());
  return SaliencyMap(a.dims[0], a.dims[1], std::move(v));
}

inline void save_saliency(const SaliencyMap& s, const std::filesystem::path& path) {
  save_dense(path, to_dense(s));
}
inline SaliencyMap load_saliency(const std::filesystem::path& path) {
  return saliency_from_dense(load_dense(path));
}

/// Warp grids: rank 3 (h, w, 2) holding (x, y).
inline DenseArray to_dense(const WarpGrid& g) {
  DenseArray a{{static_cast<std::uint32_t>(g.spec.rows), static_cast<std::uint32_t>(g.spec.cols), 2}, {}};
  a.data.reserve(g.points.size() * 2);
  for (const auto& p : g.points) {
    a.data.push_back(static_cast<float>(p.x));
    a.data.push_back(static_cast<float>(p.y));
  }
  return a;
}

inline WarpGrid warp_grid_from_dense(const DenseArray& a) {
  if (a.dims.size() != 3 || a.dims[2] != 2) throw ValidationError("warp grid file must be rank 3 (h, w, 2)");
  WarpGrid g;
  g.spec = {a.dims[0], a.dims[1]};
  if (g.spec.rows < 2 || g.spec.cols < 2) throw ValidationError("warp grid must be at least 2x2");
  g.points.resize(g.spec.size());
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    g.points[i] = {a.data[2 * i], a.data[2 * i + 1]};
    if (!std::isfinite(g.points[i].x) || !std::isfinite(g.points[i].y)) {
      throw ValidationError("warp grid holds a non-finite coordinate");
    }
  }
  return g;
}

/// Coordinate fields: rank 3 (H, W, 3) holding (x, y, valid), valid in {0, 1}.
inline DenseArray to_dense(const CoordField& f) {
  DenseArray a{{static_cast<std::uint32_t>(f.spec.rows), static_cast<std::uint32_t>(f.spec.cols), 3}, {}};
  a.data.reserve(f.points.size() * 3);
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    const bool ok = f.valid[i] != 0;
    a.data.push_back(ok ? static_cast<float>(f.points[i].x) : 0.0f);
    a.data.push_back(ok ? static_cast<float>(f.points[i].y) : 0.0f);
    a.data.push_back(ok ? 1.0f : 0.0f);
  }
  return a;
}

inline CoordField field_from_dense(const DenseArray& a) {
  if (a.dims.size() != 3 || a.dims[2] != 3) throw ValidationError("field file must be rank 3 (H, W, 3)");
  CoordField f(GridSpec{a.dims[0], a.dims[1]});
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    const float v = a.data[3 * i + 2];
    if (v != 0.0f && v != 1.0f) throw ValidationError("field validity must be 0 or 1");
    if (v == 1.0f) {
      f.points[i] = {a.data[3 * i], a.data[3 * i + 1]};
      if (!std::isfinite(f.points[i].x) || !std::isfinite(f.points[i].y)) {
        throw ValidationError("field holds a non-finite coordinate");
      }
      f.valid[i] = 1;
    }
  }
  return f;
}

/// Jacobians: rank 2 (output samples, saliency samples).
inline DenseArray to_dense(const WarpJacobian& j) {
  DenseArray a{{static_cast<std::uint32_t>(j.rows), static_cast<std::uint32_t>(j.cols)}, {}};
  a.data.reserve(j.values.size());
  for (double v : j.values) a.data.push_back(static_cast<float>(v));
  return a;
}

/// Images: rank 3 (H, W, C).
template <typename T>
DenseArray to_dense(const ImageTensor<T>& img) {
  DenseArray a{{static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()),
                static_cast<std::uint32_t>(img.channels())},
               {}};
  a.data.reserve(img.size());
  for (auto v : img.data()) a.data.push_back(static_cast<float>(v));
  return a;
}

inline Image image_from_dense(const DenseArray& a) {
  if (a.dims.size() == 2) return Image(a.dims[0], a.dims[1], 1, a.data);
  if (a.dims.size() == 3) return Image(a.dims[0], a.dims[1], a.dims[2], a.data);
  throw ValidationError("image file must be rank 2 or 3");
}

}  // namespace lzu
