// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Normalized-coordinate grids, dense image containers and the bilinear
//! primitives every other header builds on.
//!
//! Coordinates are (x, y) with x along the width and y along the height, both
//! in [0, 1]. Sample d of a D-long axis sits at d / (D - 1), so grid points
//! coincide with pixel centers and the first/last samples are exactly 0 and 1.

#pragma once

#include <lzu/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace lzu {

struct NormCoord {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const NormCoord&, const NormCoord&) = default;
  friend NormCoord operator+(NormCoord a, NormCoord b) { return {a.x + b.x, a.y + b.y}; }
  friend NormCoord operator-(NormCoord a, NormCoord b) { return {a.x - b.x, a.y - b.y}; }
  friend NormCoord operator*(double s, NormCoord a) { return {s * a.x, s * a.y}; }
};

inline double distance(NormCoord a, NormCoord b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Size of a regular sampling grid; both dimensions must be at least 2.
struct GridSpec {
  std::size_t rows = 2;
  std::size_t cols = 2;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;

  void validate(const char* what = "grid") const {
    if (rows < 2 || cols < 2) {
      throw InvalidArgument(std::string(what) + ": grid dimensions must be >= 2, got " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
};

/// d-th sample of Grid(count). Exact at both endpoints.
inline double grid_coord(std::size_t d, std::size_t count) {
  if (d + 1 == count) return 1.0;
  return static_cast<double>(d) / static_cast<double>(count - 1);
}

/// Grid(count) as a vector.
inline std::vector<double> make_axis(std::size_t count) {
  if (count < 2) throw InvalidArgument("axis needs at least 2 samples");
  std::vector<double> axis(count);
  for (std::size_t d = 0; d < count; ++d) axis[d] = grid_coord(d, count);
  return axis;
}

/// Grid(rows, cols), row-major: index r * cols + c holds (c/(cols-1), r/(rows-1)).
inline std::vector<NormCoord> make_grid(const GridSpec& spec) {
  spec.validate();
  std::vector<NormCoord> out;
  out.reserve(spec.size());
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double y = grid_coord(r, spec.rows);
    for (std::size_t c = 0; c < spec.cols; ++c) out.push_back({grid_coord(c, spec.cols), y});
  }
  return out;
}

/// Dense H x W x C array, row-major with interleaved channels.
template <typename T = float>
class ImageTensor {
 public:
  using value_type = T;

  ImageTensor() = default;

  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, T fill = T{})
      : height_(height), width_(width), channels_(channels),
        data_(checked_size(height, width, channels), fill) {}

  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<T> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (data_.size() != checked_size(height, width, channels)) {
      throw InvalidArgument("image data length does not match H*W*C");
    }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(std::size_t r, std::size_t c, std::size_t ch = 0) {
    return data_[(r * width_ + c) * channels_ + ch];
  }
  const T& at(std::size_t r, std::size_t c, std::size_t ch = 0) const {
    return data_[(r * width_ + c) * channels_ + ch];
  }

  std::span<T> pixel(std::size_t r, std::size_t c) {
    return {data_.data() + (r * width_ + c) * channels_, channels_};
  }
  std::span<const T> pixel(std::size_t r, std::size_t c) const {
    return {data_.data() + (r * width_ + c) * channels_, channels_};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  static std::size_t checked_size(std::size_t h, std::size_t w, std::size_t c) {
    if (h == 0 || w == 0 || c == 0) throw InvalidArgument("image dimensions must be positive");
    return h * w * c;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<T> data_;
};

using Image = ImageTensor<float>;

/// Forward warp control points T[Grid(h, w)], row-major like make_grid.
struct WarpGrid {
  GridSpec spec;
  std::vector<NormCoord> points;
  bool anti_cropping = false;
  bool separable = false;

  const NormCoord& at(std::size_t r, std::size_t c) const { return points[r * spec.cols + c]; }
  NormCoord& at(std::size_t r, std::size_t c) { return points[r * spec.cols + c]; }

  static WarpGrid identity(const GridSpec& spec) {
    return WarpGrid{spec, make_grid(spec), true, true};
  }
};

/// Dense coordinate field sampled on Grid(rows, cols) with a validity mask.
/// Invalid points hold (0, 0).
struct CoordField {
  GridSpec spec;
  std::vector<NormCoord> points;
  std::vector<std::uint8_t> valid;

  CoordField() = default;
  explicit CoordField(const GridSpec& s, bool all_valid = false)
      : spec(s), points(s.size()), valid(s.size(), all_valid ? 1 : 0) {}

  const NormCoord& at(std::size_t r, std::size_t c) const { return points[r * spec.cols + c]; }
  NormCoord& at(std::size_t r, std::size_t c) { return points[r * spec.cols + c]; }
  bool is_valid(std::size_t r, std::size_t c) const { return valid[r * spec.cols + c] != 0; }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
  }

  static CoordField identity(const GridSpec& spec) {
    CoordField f(spec, true);
    f.points = make_grid(spec);
    return f;
  }
};

/// Sampled left inverse of a warp; same layout as any other coordinate field.
using InverseWarpField = CoordField;

/// Runs fn(begin, end) over [0, n) split into at most `threads` contiguous
/// chunks. Chunks are disjoint so writers never overlap.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads - 1);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 1; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) workers.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min(n, chunk));
}

namespace detail {

// Cell index and fractional offset of normalized coordinate t on an axis of
// `count` samples, clamped to the border.
inline std::pair<std::size_t, double> locate(double t, std::size_t count) {
  if (count < 2) return {0, 0.0};
  double pos = std::clamp(t, 0.0, 1.0) * static_cast<double>(count - 1);
  // Snap round-off so grid-aligned queries hit pixel centers exactly.
  const double nearest = std::nearbyint(pos);
  if (std::abs(pos - nearest) <= 1e-12 * static_cast<double>(count)) pos = nearest;
  std::size_t i = static_cast<std::size_t>(pos);
  if (i >= count - 1) i = count - 2;
  return {i, pos - static_cast<double>(i)};
}

template <typename T>
void sample_into(const ImageTensor<T>& img, NormCoord p, double* out) {
  const std::size_t h = img.height(), w = img.width(), nc = img.channels();
  const auto [c0, fx] = locate(p.x, w);
  const auto [r0, fy] = locate(p.y, h);
  const std::size_t c1 = w > 1 ? c0 + 1 : c0;
  const std::size_t r1 = h > 1 ? r0 + 1 : r0;
  const auto p00 = img.pixel(r0, c0), p01 = img.pixel(r0, c1);
  const auto p10 = img.pixel(r1, c0), p11 = img.pixel(r1, c1);
  for (std::size_t ch = 0; ch < nc; ++ch) {
    const double top = (1.0 - fx) * p00[ch] + fx * p01[ch];
    const double bot = (1.0 - fx) * p10[ch] + fx * p11[ch];
    out[ch] = (1.0 - fy) * top + fy * bot;
  }
}

}  // namespace detail

/// Bilinear interpolation of the four pixel centers around p. Coordinates
/// outside [0, 1] clamp to the border.
template <typename T>
std::vector<double> bilinear_sample(const ImageTensor<T>& img, NormCoord p) {
  std::vector<double> out(img.channels());
  detail::sample_into(img, p, out.data());
  return out;
}

/// out(x) = img(field(x)) for valid field points, zero elsewhere. `out` must
/// already have the field's dimensions and the image's channel count.
template <typename T>
void resample_into(const ImageTensor<T>& img, const CoordField& field, ImageTensor<T>& out,
                   std::size_t threads = 1) {
  const GridSpec& spec = field.spec;
  const std::size_t nc = img.channels();
  if (out.height() != spec.rows || out.width() != spec.cols || out.channels() != nc) {
    throw InvalidArgument("resample output has the wrong shape");
  }
  parallel_for(spec.rows, threads, [&](std::size_t rb, std::size_t re) {
    std::vector<double> buf(nc);
    for (std::size_t r = rb; r < re; ++r) {
      for (std::size_t c = 0; c < spec.cols; ++c) {
        auto px = out.pixel(r, c);
        if (!field.is_valid(r, c)) {
          std::fill(px.begin(), px.end(), T{});
          continue;
        }
        detail::sample_into(img, field.at(r, c), buf.data());
        for (std::size_t ch = 0; ch < nc; ++ch) px[ch] = static_cast<T>(buf[ch]);
      }
    }
  });
}

template <typename T>
ImageTensor<T> resample(const ImageTensor<T>& img, const CoordField& field,
                        std::size_t threads = 1) {
  ImageTensor<T> out(field.spec.rows, field.spec.cols, img.channels());
  resample_into(img, field, out, threads);
  return out;
}

/// Evaluates the piecewise-bilinear map defined by the control points of
/// `grid` at p. Identical to upsample_grid at grid locations.
inline NormCoord evaluate_piecewise(const WarpGrid& grid, NormCoord p) {
  const auto [c0, fx] = detail::locate(p.x, grid.spec.cols);
  const auto [r0, fy] = detail::locate(p.y, grid.spec.rows);
  const NormCoord& p00 = grid.at(r0, c0);
  const NormCoord& p01 = grid.at(r0, c0 + 1);
  const NormCoord& p10 = grid.at(r0 + 1, c0);
  const NormCoord& p11 = grid.at(r0 + 1, c0 + 1);
  const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
  const double w10 = (1 - fx) * fy, w11 = fx * fy;
  return {w00 * p00.x + w01 * p01.x + w10 * p10.x + w11 * p11.x,
          w00 * p00.y + w01 * p01.y + w10 * p10.y + w11 * p11.y};
}

/// Bilinear upsampling of coarse control points onto Grid(out.spec), written
/// into `out` (all points valid).
inline void upsample_grid_into(const WarpGrid& coarse, CoordField& out, std::size_t threads = 1) {
  coarse.spec.validate("coarse grid");
  const GridSpec target = out.spec;
  target.validate("upsample target");
  if (coarse.points.size() != coarse.spec.size()) {
    throw InvalidArgument("warp grid point count does not match its spec");
  }
  if (out.points.size() != target.size() || out.valid.size() != target.size()) {
    throw InvalidArgument("upsample output has the wrong shape");
  }
  std::vector<std::pair<std::size_t, double>> cx(target.cols), ry(target.rows);
  for (std::size_t c = 0; c < target.cols; ++c) cx[c] = detail::locate(grid_coord(c, target.cols), coarse.spec.cols);
  for (std::size_t r = 0; r < target.rows; ++r) ry[r] = detail::locate(grid_coord(r, target.rows), coarse.spec.rows);
  std::fill(out.valid.begin(), out.valid.end(), std::uint8_t{1});
  parallel_for(target.rows, threads, [&](std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      const auto [r0, fy] = ry[r];
      const NormCoord* top = &coarse.points[r0 * coarse.spec.cols];
      const NormCoord* bot = top + coarse.spec.cols;
      NormCoord* dst = &out.points[r * target.cols];
      for (std::size_t c = 0; c < target.cols; ++c) {
        const auto [c0, fx] = cx[c];
        const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
        const double w10 = (1 - fx) * fy, w11 = fx * fy;
        dst[c] = {w00 * top[c0].x + w01 * top[c0 + 1].x + w10 * bot[c0].x + w11 * bot[c0 + 1].x,
                  w00 * top[c0].y + w01 * top[c0 + 1].y + w10 * bot[c0].y + w11 * bot[c0 + 1].y};
      }
    }
  });
}

/// Bilinear upsampling of coarse control points onto Grid(target).
inline CoordField upsample_grid(const WarpGrid& coarse, const GridSpec& target,
                                std::size_t threads = 1) {
  target.validate("upsample target");
  CoordField field(target, true);
  upsample_grid_into(coarse, field, threads);
  return field;
}

}  // namespace lzu
