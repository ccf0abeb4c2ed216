// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Saliency-driven forward warps.
//!
//! Every control point is pulled toward nearby salient samples: its source
//! location is the saliency- and kernel-weighted mean of the saliency sample
//! positions. The integrals are evaluated as sums over the saliency grid
//! itself, one sample per cell.
//!
//! Kernel distances are measured in saliency grid cells. The Gaussian is
//! truncated to a square window of half-width `truncation * sigma` per axis,
//! which keeps the 2D kernel an exact product of the two 1D kernels.
//!
//! Anti-cropping reflects the saliency field across every border (repeated
//! reflection when the window is wider than the grid), then maps each axis
//! affinely so its extreme control points land exactly on 0 and 1.

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lzu {

/// Nonnegative saliency values over Grid(rows, cols), row-major.
class SaliencyMap {
 public:
  SaliencyMap(std::size_t rows, std::size_t cols, std::vector<double> values)
      : spec_{rows, cols}, values_(std::move(values)) {
    spec_.validate("saliency map");
    if (values_.size() != spec_.size()) {
      throw InvalidArgument("saliency value count does not match its dimensions");
    }
    bool any_positive = false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("saliency value at index " + std::to_string(i) +
                              " is negative or not finite");
      }
      any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw ValidationError("saliency map is all zero");
  }

  static SaliencyMap uniform(std::size_t rows, std::size_t cols, double value = 1.0) {
    return SaliencyMap(rows, cols, std::vector<double>(rows * cols, value));
  }

  std::size_t rows() const { return spec_.rows; }
  std::size_t cols() const { return spec_.cols; }
  const GridSpec& spec() const { return spec_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * spec_.cols + c]; }
  std::span<const double> values() const { return values_; }

  /// Left-right mirror image.
  SaliencyMap mirrored_x() const {
    std::vector<double> v(values_.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t c = 0; c < cols(); ++c) v[r * cols() + c] = at(r, cols() - 1 - c);
    return SaliencyMap(rows(), cols(), std::move(v));
  }

  SaliencyMap scaled(double factor) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return SaliencyMap(rows(), cols(), std::move(v));
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// fwhm -> Gaussian standard deviation.
inline double kernel_sigma(double fwhm) {
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) {
    throw InvalidArgument("kernel fwhm must be positive, got " + std::to_string(fwhm));
  }
  return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

/// Gaussian attraction kernel parameterized by its full width at half
/// maximum, in saliency grid cells.
struct AttractionKernel {
  double fwhm = 22.0;
  /// Window half-width in multiples of sigma.
  double truncation = 4.0;

  double sigma() const { return kernel_sigma(fwhm); }
  double radius() const { return truncation * sigma(); }

  void validate() const {
    (void)sigma();
    if (!(truncation > 0.0) || !std::isfinite(truncation)) {
      throw InvalidArgument("kernel truncation must be positive");
    }
  }
};

enum class Marginalization { max, mean };

/// Two per-axis monotone sample arrays: xs = T_x[Grid(w)], ys = T_y[Grid(h)].
struct SeparableWarp {
  std::vector<double> xs;
  std::vector<double> ys;
  bool anti_cropping = false;

  static SeparableWarp identity(std::size_t rows, std::size_t cols) {
    return {make_axis(cols), make_axis(rows), true};
  }
};

/// Cartesian product of the two axes, as a control grid.
inline WarpGrid to_warp_grid(const SeparableWarp& w) {
  GridSpec spec{w.ys.size(), w.xs.size()};
  spec.validate("separable warp");
  WarpGrid g{spec, std::vector<NormCoord>(spec.size()), w.anti_cropping, true};
  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t c = 0; c < spec.cols; ++c) g.at(r, c) = {w.xs[c], w.ys[r]};
  return g;
}

namespace detail {

// Maps an integer sample index on a padded axis back into [0, n) by repeated
// mirror reflection about the first and last samples (period 2(n - 1)).
inline std::size_t reflect_index(long long j, std::size_t n) {
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = j % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

// Kernel taps of one output sample along one axis. Sample j sits at
// normalized position j / (n - 1); j may lie outside [0, n) when padded.
struct AxisTaps {
  long long first = 0;  // index of weights[0]
  std::vector<double> weights;
};

// Taps for every output position of an axis with `n_out` samples over a
// saliency axis of `n_sal` samples.
inline std::vector<AxisTaps> axis_taps(std::size_t n_out, std::size_t n_sal,
                                       const AttractionKernel& k, bool padded) {
  const double sigma = k.sigma();
  const double radius = k.radius();
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double scale = static_cast<double>(n_sal - 1);
  std::vector<AxisTaps> taps(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = grid_coord(i, n_out) * scale;
    long long lo = static_cast<long long>(std::ceil(pos - radius));
    long long hi = static_cast<long long>(std::floor(pos + radius));
    if (!padded) {
      lo = std::max<long long>(lo, 0);
      hi = std::min<long long>(hi, static_cast<long long>(n_sal) - 1);
    }
    AxisTaps& t = taps[i];
    t.first = lo;
    t.weights.resize(static_cast<std::size_t>(std::max<long long>(hi - lo + 1, 0)));
    for (long long j = lo; j <= hi; ++j) {
      const double d = pos - static_cast<double>(j);
      t.weights[static_cast<std::size_t>(j - lo)] = std::exp(-d * d * inv2s2);
    }
  }
  return taps;
}

inline double sample_position(long long j, std::size_t n_sal) {
  return static_cast<double>(j) / static_cast<double>(n_sal - 1);
}

inline void check_strictly_increasing(std::span<const double> v, const char* axis) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw FoldoverError(std::string("foldover on ") + axis + " axis between samples " +
                          std::to_string(i - 1) + " and " + std::to_string(i) +
                          " (kernel too narrow for the saliency variation?)");
    }
  }
}

// Affine map of `v` so min -> 0 and max -> 1.
inline void renormalize_axis(std::span<double> v, double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) throw FoldoverError("warp collapsed an axis to a single value");
  for (double& t : v) t = (t - lo) / span;
}

}  // namespace detail

/// One-dimensional attraction warp: T[Grid(n_out)] for a 1D saliency.
inline std::vector<double> axis_warp(std::span<const double> saliency, const AttractionKernel& k,
                                     std::size_t n_out, bool anti_cropping) {
  k.validate();
  const std::size_t n = saliency.size();
  if (n < 2 || n_out < 2) throw InvalidArgument("axis warp needs at least 2 samples");
  const auto taps = detail::axis_taps(n_out, n, k, anti_cropping);
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double num = 0.0, den = 0.0;
    const auto& t = taps[i];
    for (std::size_t q = 0; q < t.weights.size(); ++q) {
      const long long j = t.first + static_cast<long long>(q);
      const double w = saliency[detail::reflect_index(j, n)] * t.weights[q];
      num += w * detail::sample_position(j, n);
      den += w;
    }
    if (!(den > 0.0)) {
      throw DegenerateSaliency("zero saliency mass under the kernel at axis sample " +
                               std::to_string(i));
    }
    out[i] = num / den;
  }
  if (anti_cropping) {
    detail::renormalize_axis(out, out.front(), out.back());
    out.front() = 0.0;
    out.back() = 1.0;
  }
  detail::check_strictly_increasing(out, "warp");
  return out;
}

/// Collapses a saliency map to its two 1D marginals {S_x (cols), S_y (rows)}.
inline std::pair<std::vector<double>, std::vector<double>> marginalize(const SaliencyMap& s,
                                                                       Marginalization how) {
  std::vector<double> sx(s.cols(), 0.0), sy(s.rows(), 0.0);
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t c = 0; c < s.cols(); ++c) {
      const double v = s.at(r, c);
      if (how == Marginalization::max) {
        sx[c] = std::max(sx[c], v);
        sy[r] = std::max(sy[r], v);
      } else {
        sx[c] += v / static_cast<double>(s.rows());
        sy[r] += v / static_cast<double>(s.cols());
      }
    }
  }
  return {std::move(sx), std::move(sy)};
}

/// Throws FoldoverError unless x increases strictly along every row and y
/// along every column, and every tile is a positively oriented convex
/// quadrilateral (the condition for its bilinear map to be invertible).
inline void check_foldover(const WarpGrid& g) {
  const std::size_t h = g.spec.rows, w = g.spec.cols;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (c + 1 < w && !(g.at(r, c + 1).x > g.at(r, c).x)) {
        throw FoldoverError("foldover: x not increasing along row " + std::to_string(r) +
                            " at column " + std::to_string(c));
      }
      if (r + 1 < h && !(g.at(r + 1, c).y > g.at(r, c).y)) {
        throw FoldoverError("foldover: y not increasing along column " + std::to_string(c) +
                            " at row " + std::to_string(r));
      }
    }
  }
  auto cross = [](NormCoord a, NormCoord b) { return a.x * b.y - a.y * b.x; };
  for (std::size_t r = 0; r + 1 < h; ++r) {
    for (std::size_t c = 0; c + 1 < w; ++c) {
      const NormCoord q[4] = {g.at(r, c), g.at(r, c + 1), g.at(r + 1, c + 1), g.at(r + 1, c)};
      for (int k = 0; k < 4; ++k) {
        const NormCoord prev = q[(k + 3) % 4], cur = q[k], next = q[(k + 1) % 4];
        if (!(cross(cur - prev, next - cur) > 0.0)) {
          throw FoldoverError("foldover: tile (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") is degenerate or not convex");
        }
      }
    }
  }
}

/// Nonseparable attraction warp sampled on Grid(spec).
inline WarpGrid lz_warp(const SaliencyMap& s, const AttractionKernel& k, const GridSpec& spec,
                        bool anti_cropping) {
  k.validate();
  spec.validate("warp grid");
  const std::size_t sh = s.rows(), sw = s.cols();
  const auto ty = detail::axis_taps(spec.rows, sh, k, anti_cropping);
  const auto tx = detail::axis_taps(spec.cols, sw, k, anti_cropping);

  // Column span covered by any x window.
  long long cx_lo = 0, cx_hi = static_cast<long long>(sw) - 1;
  for (const auto& t : tx) {
    cx_lo = std::min(cx_lo, t.first);
    cx_hi = std::max(cx_hi, t.first + static_cast<long long>(t.weights.size()) - 1);
  }
  const std::size_t ncols = static_cast<std::size_t>(cx_hi - cx_lo + 1);

  WarpGrid g{spec, std::vector<NormCoord>(spec.size()), anti_cropping, false};
  std::vector<double> mass(ncols), ymom(ncols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    // Collapse rows with the y kernel: mass[c] = sum_j S(j, c) ky, ymom adds y_j.
    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(ymom.begin(), ymom.end(), 0.0);
    const auto& t = ty[r];
    for (std::size_t q = 0; q < t.weights.size(); ++q) {
      const long long j = t.first + static_cast<long long>(q);
      const std::size_t sr = detail::reflect_index(j, sh);
      const double yj = detail::sample_position(j, sh);
      for (std::size_t cc = 0; cc < ncols; ++cc) {
        const long long col = cx_lo + static_cast<long long>(cc);
        const double v = s.at(sr, detail::reflect_index(col, sw)) * t.weights[q];
        mass[cc] += v;
        ymom[cc] += v * yj;
      }
    }
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const auto& u = tx[c];
      double num_x = 0.0, num_y = 0.0, den = 0.0;
      for (std::size_t q = 0; q < u.weights.size(); ++q) {
        const long long col = u.first + static_cast<long long>(q);
        const std::size_t cc = static_cast<std::size_t>(col - cx_lo);
        const double m = mass[cc] * u.weights[q];
        num_x += m * detail::sample_position(col, sw);
        num_y += ymom[cc] * u.weights[q];
        den += m;
      }
      if (!(den > 0.0)) {
        throw DegenerateSaliency("zero saliency mass under the kernel at control point (" +
                                 std::to_string(r) + ", " + std::to_string(c) + ")");
      }
      g.at(r, c) = {num_x / den, num_y / den};
    }
  }

  if (anti_cropping) {
    double xlo = g.points[0].x, xhi = xlo, ylo = g.points[0].y, yhi = ylo;
    for (const auto& p : g.points) {
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      ylo = std::min(ylo, p.y);
      yhi = std::max(yhi, p.y);
    }
    if (!(xhi > xlo) || !(yhi > ylo)) throw FoldoverError("warp collapsed an axis");
    for (auto& p : g.points) p = {(p.x - xlo) / (xhi - xlo), (p.y - ylo) / (yhi - ylo)};
    for (std::size_t r = 0; r < spec.rows; ++r) {
      g.at(r, 0).x = 0.0;
      g.at(r, spec.cols - 1).x = 1.0;
    }
    for (std::size_t c = 0; c < spec.cols; ++c) {
      g.at(0, c).y = 0.0;
      g.at(spec.rows - 1, c).y = 1.0;
    }
  }
  check_foldover(g);
  return g;
}

/// Separable attraction warp: each axis warped by its own marginal.
/// `sizes` is (rows, cols) of the output control arrays.
inline SeparableWarp lz_warp_separable(const SaliencyMap& s, Marginalization how,
                                       const AttractionKernel& kx, const AttractionKernel& ky,
                                       const GridSpec& sizes, bool anti_cropping) {
  sizes.validate("separable warp");
  const auto [sx, sy] = marginalize(s, how);
  SeparableWarp w;
  w.anti_cropping = anti_cropping;
  try {
    w.xs = axis_warp(sx, kx, sizes.cols, anti_cropping);
  } catch (const FoldoverError& e) {
    throw FoldoverError(std::string("x axis: ") + e.what());
  }
  try {
    w.ys = axis_warp(sy, ky, sizes.rows, anti_cropping);
  } catch (const FoldoverError& e) {
    throw FoldoverError(std::string("y axis: ") + e.what());
  }
  return w;
}

/// Per-tile magnification (output pixels per input pixel) of a control grid:
/// rectangle area over source-quadrilateral area. Layout (rows-1) x (cols-1).
struct TileMap {
  GridSpec tiles;  // may have 1 row/col; not a sampling grid
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * tiles.cols + c]; }
};

inline double quad_area(NormCoord bl, NormCoord br, NormCoord tr, NormCoord tl) {
  const NormCoord q[4] = {bl, br, tr, tl};
  double a = 0.0;
  for (int k = 0; k < 4; ++k) {
    const NormCoord& p = q[k];
    const NormCoord& n = q[(k + 1) % 4];
    a += p.x * n.y - n.x * p.y;
  }
  return 0.5 * a;
}

inline TileMap magnification_map(const WarpGrid& g) {
  g.spec.validate("warp grid");
  const std::size_t th = g.spec.rows - 1, tw = g.spec.cols - 1;
  const double rect = 1.0 / static_cast<double>(th * tw);
  TileMap m{{th, tw}, std::vector<double>(th * tw)};
  for (std::size_t r = 0; r < th; ++r) {
    for (std::size_t c = 0; c < tw; ++c) {
      const double a = quad_area(g.at(r, c), g.at(r, c + 1), g.at(r + 1, c + 1), g.at(r + 1, c));
      if (!(a > 0.0)) {
        throw FoldoverError("degenerate tile (" + std::to_string(r) + ", " + std::to_string(c) +
                            ") in magnification map");
      }
      m.values[r * tw + c] = rect / a;
    }
  }
  return m;
}

}  // namespace lzu
