// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Inversion of piecewise warps.
//!
//! A control grid T[Grid(h, w)] defines a piecewise-bilinear forward map whose
//! (i, j) tile sends grid rectangle R_ij onto the quadrilateral spanned by the
//! four control points. Inverting a tile means solving a quadratic; inverting
//! the whole map means finding, for every output sample, the tile that covers
//! it. Points no tile covers are marked invalid and hold (0, 0).

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/zoom.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lzu {

/// Tolerance band around the unit square when accepting a preimage.
inline constexpr double kTileEpsilon = 1e-9;

/// One bilinear tile: the images of a domain rectangle's corners.
/// bl/br/tl/tr are the images of (x0, y0), (x1, y0), (x0, y1), (x1, y1).
struct BilinearTile {
  NormCoord bl, br, tl, tr;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  static BilinearTile from_grid(const WarpGrid& g, std::size_t r, std::size_t c) {
    return {g.at(r, c),
            g.at(r, c + 1),
            g.at(r + 1, c),
            g.at(r + 1, c + 1),
            grid_coord(c, g.spec.cols),
            grid_coord(c + 1, g.spec.cols),
            grid_coord(r, g.spec.rows),
            grid_coord(r + 1, g.spec.rows)};
  }

  /// Bilinear map of unit-square coordinates (u, v).
  NormCoord forward_unit(double u, double v) const {
    return {bl.x + (br.x - bl.x) * u + (tl.x - bl.x) * v + (tr.x - br.x - tl.x + bl.x) * u * v,
            bl.y + (br.y - bl.y) * u + (tl.y - bl.y) * v + (tr.y - br.y - tl.y + bl.y) * u * v};
  }

  /// Throws InvalidArgument unless the quadrilateral is convex and positively
  /// oriented, i.e. the bilinear Jacobian is positive on the whole square.
  void validate() const {
    if (!(x1 > x0) || !(y1 > y0)) throw InvalidArgument("tile domain rectangle is empty");
    const NormCoord q[4] = {bl, br, tr, tl};
    double ext = 0.0;
    for (int k = 0; k < 4; ++k) {
      ext = std::max({ext, std::abs(q[k].x - q[(k + 2) % 4].x), std::abs(q[k].y - q[(k + 2) % 4].y)});
    }
    const double floor = 1e-14 * ext * ext;
    for (int k = 0; k < 4; ++k) {
      const NormCoord prev = q[(k + 3) % 4], cur = q[k], next = q[(k + 1) % 4];
      const NormCoord a = cur - prev, b = next - cur;
      if (!(a.x * b.y - a.y * b.x > floor)) {
        throw InvalidArgument("degenerate bilinear tile (zero area, reflex corner or reversed)");
      }
    }
  }
};

/// Coefficients of the inverse bilinear map: corner differences (a_k, b_k)
/// and the per-query quadratic c2 v^2 + c1 v + c0 = 0.
struct InverseCoeffs {
  double a0, a1, a2, a3;
  double b0, b1, b2, b3;

  static InverseCoeffs from_tile(const BilinearTile& t) {
    return {t.bl.x, t.br.x - t.bl.x, t.tl.x - t.bl.x, t.tr.x - t.br.x - t.tl.x + t.bl.x,
            t.bl.y, t.br.y - t.bl.y, t.tl.y - t.bl.y, t.tr.y - t.br.y - t.tl.y + t.bl.y};
  }

  double c0(double x, double y) const { return a1 * (b0 - y) + b1 * (x - a0); }
  double c1(double x, double y) const {
    return a3 * (b0 - y) + b3 * (x - a0) + a1 * b2 - a2 * b1;
  }
  double c2() const { return a3 * b2 - a2 * b3; }
};

namespace detail {

// Inverse of one tile in unit-square coordinates. `inv_scale2` rescales the
// quadratic so the linear-case threshold is independent of tile size.
inline std::optional<std::pair<double, double>> solve_unit(const InverseCoeffs& k,
                                                           const BilinearTile& tile, double x,
                                                           double y, double inv_scale2) {
  const double c0 = k.c0(x, y) * inv_scale2;
  const double c1 = k.c1(x, y) * inv_scale2;
  const double c2 = k.c2() * inv_scale2;

  std::array<double, 2> roots{};
  int nroots = 0;
  if (std::abs(c2) < 1e-12) {
    if (c1 == 0.0) return std::nullopt;
    roots[nroots++] = -c0 / c1;
  } else {
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) {
      if (disc < -1e-12 * c1 * c1) return std::nullopt;
      disc = 0.0;
    }
    const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
    if (q == 0.0) {
      roots[nroots++] = 0.0;
    } else {
      roots[nroots++] = c0 / q;
      roots[nroots++] = q / c2;
    }
  }

  constexpr double lo = -kTileEpsilon, hi = 1.0 + kTileEpsilon;
  std::optional<std::pair<double, double>> best;
  double best_res = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nroots; ++i) {
    const double v = roots[i];
    if (!(v >= lo && v <= hi)) continue;
    const double dx = k.a1 + k.a3 * v;
    const double dy = k.b1 + k.b3 * v;
    const double u = std::abs(dx) >= std::abs(dy) ? (x - k.a0 - k.a2 * v) / dx
                                                  : (y - k.b0 - k.b2 * v) / dy;
    if (!(u >= lo && u <= hi)) continue;
    const NormCoord f = tile.forward_unit(u, v);
    const double res = (f.x - x) * (f.x - x) + (f.y - y) * (f.y - y);
    if (res < best_res) {
      best_res = res;
      best = std::pair{std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
    }
  }
  return best;
}

inline double tile_inv_scale2(const BilinearTile& t) {
  const double xmin = std::min({t.bl.x, t.br.x, t.tl.x, t.tr.x});
  const double xmax = std::max({t.bl.x, t.br.x, t.tl.x, t.tr.x});
  const double ymin = std::min({t.bl.y, t.br.y, t.tl.y, t.tr.y});
  const double ymax = std::max({t.bl.y, t.br.y, t.tl.y, t.tr.y});
  const double ext = std::max(xmax - xmin, ymax - ymin);
  return 1.0 / (ext * ext);
}

}  // namespace detail

/// Preimage of p under the tile, in the tile's domain-rectangle coordinates,
/// or nullopt when p is outside the source quadrilateral.
inline std::optional<NormCoord> inverse_bilinear(const BilinearTile& tile, NormCoord p) {
  tile.validate();
  const auto k = InverseCoeffs::from_tile(tile);
  const auto uv = detail::solve_unit(k, tile, p.x, p.y, detail::tile_inv_scale2(tile));
  if (!uv) return std::nullopt;
  return NormCoord{tile.x0 + uv->first * (tile.x1 - tile.x0),
                   tile.y0 + uv->second * (tile.y1 - tile.y0)};
}

// ---------------------------------------------------------------------------
// Separable inversion

struct AxisInverse {
  double value = 0.0;
  bool valid = false;
};

/// Piecewise-linear interpolation of samples over Grid(n) at t in [0, 1].
inline double evaluate_axis(std::span<const double> samples, double t) {
  const auto [i, f] = detail::locate(t, samples.size());
  return samples[i] + f * (samples[i + 1] - samples[i]);
}

/// Inverts the piecewise-linear map through (Grid(n)[i], samples[i]) at every
/// query. Sorted queries use a merge sweep; others binary search.
inline std::vector<AxisInverse> invert_separable_axis(std::span<const double> samples,
                                                      std::span<const double> queries) {
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidArgument("axis needs at least 2 samples");
  detail::check_strictly_increasing(samples, "inverted");
  const double lo = samples.front(), hi = samples.back();
  const double denom = static_cast<double>(n - 1);
  std::vector<AxisInverse> out(queries.size());
  auto solve = [&](std::size_t i, double q) {
    return AxisInverse{(static_cast<double>(i) + (q - samples[i]) / (samples[i + 1] - samples[i])) /
                           denom,
                       true};
  };
  const bool sorted = std::is_sorted(queries.begin(), queries.end());
  std::size_t seg = 0;
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const double q = queries[k];
    if (!(q >= lo && q <= hi)) continue;
    if (sorted) {
      while (seg + 2 < n && samples[seg + 1] < q) ++seg;
    } else {
      const auto it = std::upper_bound(samples.begin(), samples.end(), q);
      seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - samples.begin() - 1, 0));
      seg = std::min(seg, n - 2);
    }
    out[k] = solve(seg, q);
  }
  return out;
}

/// Cartesian product of the two axis inverses on Grid(out.spec), written into
/// `out`.
inline void invert_separable_into(const SeparableWarp& w, InverseWarpField& out) {
  const GridSpec target = out.spec;
  target.validate("inverse target");
  if (out.points.size() != target.size() || out.valid.size() != target.size()) {
    throw InvalidArgument("inverse field output has the wrong shape");
  }
  std::vector<AxisInverse> ix, iy;
  try {
    ix = invert_separable_axis(w.xs, make_axis(target.cols));
  } catch (const FoldoverError& e) {
    throw FoldoverError(std::string("x axis: ") + e.what());
  }
  try {
    iy = invert_separable_axis(w.ys, make_axis(target.rows));
  } catch (const FoldoverError& e) {
    throw FoldoverError(std::string("y axis: ") + e.what());
  }
  for (std::size_t r = 0; r < target.rows; ++r) {
    NormCoord* dst = &out.points[r * target.cols];
    std::uint8_t* ok = &out.valid[r * target.cols];
    for (std::size_t c = 0; c < target.cols; ++c) {
      const bool v = ix[c].valid && iy[r].valid;
      dst[c] = v ? NormCoord{ix[c].value, iy[r].value} : NormCoord{0.0, 0.0};
      ok[c] = v ? 1 : 0;
    }
  }
}

inline InverseWarpField invert_separable(const SeparableWarp& w, const GridSpec& target) {
  target.validate("inverse target");
  InverseWarpField f(target);
  invert_separable_into(w, f);
  return f;
}

// ---------------------------------------------------------------------------
// Nonseparable inversion

/// Points whose two claims differ by more than this are treated as an overlap.
inline constexpr double kClaimTolerance = 1e-6;

namespace detail {

struct CandidateBox {
  std::size_t r0 = 1, r1 = 0, c0 = 1, c1 = 0;  // inclusive; empty when r0 > r1
  std::size_t count() const { return (r0 > r1 || c0 > c1) ? 0 : (r1 - r0 + 1) * (c1 - c0 + 1); }
};

inline std::pair<std::size_t, std::size_t> index_range(double lo, double hi, std::size_t n) {
  const double s = static_cast<double>(n - 1);
  const double a = std::ceil(lo * s - 1e-7);
  const double b = std::floor(hi * s + 1e-7);
  const double first = std::max(a, 0.0);
  const double last = std::min(b, s);
  if (first > last) return {1, 0};
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

struct Claim {
  std::size_t index;
  NormCoord value;
};

}  // namespace detail

/// Tile-sweep inversion of a nonseparable control grid onto Grid(target).
///
/// Each tile gathers the output samples inside the axis-aligned box around its
/// quadrilateral, solves the inverse bilinear map for all of them in one batch
/// and claims those whose preimage lies inside its domain rectangle. Claims
/// are committed in row-major tile order, first writer wins; work is split
/// across `threads` and then committed in that same order, so the result does
/// not depend on the thread count.
inline InverseWarpField invert_nonseparable(const WarpGrid& g, const GridSpec& target,
                                            std::size_t threads = 1) {
  g.spec.validate("warp grid");
  target.validate("inverse target");
  check_foldover(g);
  const std::size_t th = g.spec.rows - 1, tw = g.spec.cols - 1;
  const std::size_t ntiles = th * tw;

  std::vector<detail::CandidateBox> boxes(ntiles);
  std::size_t max_batch = 0;
  for (std::size_t r = 0; r < th; ++r) {
    for (std::size_t c = 0; c < tw; ++c) {
      const auto t = BilinearTile::from_grid(g, r, c);
      const auto [xr0, xr1] = detail::index_range(std::min({t.bl.x, t.br.x, t.tl.x, t.tr.x}),
                                                  std::max({t.bl.x, t.br.x, t.tl.x, t.tr.x}),
                                                  target.cols);
      const auto [yr0, yr1] = detail::index_range(std::min({t.bl.y, t.br.y, t.tl.y, t.tr.y}),
                                                  std::max({t.bl.y, t.br.y, t.tl.y, t.tr.y}),
                                                  target.rows);
      auto& b = boxes[r * tw + c];
      b = {yr0, yr1, xr0, xr1};
      max_batch = std::max(max_batch, b.count());
    }
  }

  const auto xs = make_axis(target.cols);
  const auto ys = make_axis(target.rows);
  InverseWarpField f(target);
  auto commit = [&f](std::size_t index, NormCoord value) {
    if (f.valid[index]) {
      if (distance(f.points[index], value) > kClaimTolerance) {
        throw InjectivityError("output sample " + std::to_string(index) + " claimed by overlapping tiles");
      }
      return;
    }
    f.points[index] = value;
    f.valid[index] = 1;
  };

  // Solves every candidate of tiles [tb, te) and hands each claim to sink in
  // row-major tile order.
  auto sweep = [&](std::size_t tb, std::size_t te, auto&& sink) {
    // Fixed-size batch buffers sized to the largest candidate box.
    std::vector<double> bu(max_batch), bv(max_batch);
    std::vector<std::size_t> bidx(max_batch);
    std::vector<std::uint8_t> bok(max_batch);
    for (std::size_t ti = tb; ti < te; ++ti) {
      const auto& box = boxes[ti];
      const std::size_t n = box.count();
      if (n == 0) continue;
      const auto tile = BilinearTile::from_grid(g, ti / tw, ti % tw);
      const auto coeffs = InverseCoeffs::from_tile(tile);
      const double inv_s2 = detail::tile_inv_scale2(tile);
      const double sx = tile.x1 - tile.x0, sy = tile.y1 - tile.y0;
      std::size_t m = 0;
      for (std::size_t r = box.r0; r <= box.r1; ++r) {
        for (std::size_t c = box.c0; c <= box.c1; ++c, ++m) {
          const auto uv = detail::solve_unit(coeffs, tile, xs[c], ys[r], inv_s2);
          bidx[m] = r * target.cols + c;
          bok[m] = uv.has_value();
          if (uv) {
            bu[m] = tile.x0 + uv->first * sx;
            bv[m] = tile.y0 + uv->second * sy;
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (bok[i]) sink(bidx[i], NormCoord{bu[i], bv[i]});
      }
    }
  };

  const std::size_t nchunks = std::clamp<std::size_t>(threads, 1, ntiles);
  if (nchunks == 1) {
    sweep(0, ntiles, commit);
    return f;
  }
  std::vector<std::vector<detail::Claim>> claims(nchunks);
  const std::size_t chunk = (ntiles + nchunks - 1) / nchunks;
  parallel_for(nchunks, nchunks, [&](std::size_t kb, std::size_t ke) {
    for (std::size_t k = kb; k < ke; ++k) {
      auto& out = claims[k];
      sweep(k * chunk, std::min(ntiles, (k + 1) * chunk),
            [&out](std::size_t index, NormCoord value) { out.push_back({index, value}); });
    }
  });
  for (const auto& list : claims) {
    for (const auto& cl : list) commit(cl.index, cl.value);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Pyramid levels

/// Sample count of a level reduced by divisor d: ceil(n / d).
inline std::size_t reduced_size(std::size_t n, std::size_t d) { return (n + d - 1) / d; }

/// Bilinear downsampling of a field onto Grid(rows, cols). A level point is
/// valid only if every source point with nonzero weight is valid.
inline InverseWarpField downsample_field(const InverseWarpField& field, const GridSpec& level) {
  level.validate("pyramid level");
  const GridSpec& src = field.spec;
  InverseWarpField out(level);
  const auto xs = make_axis(level.cols);
  const auto ys = make_axis(level.rows);
  for (std::size_t r = 0; r < level.rows; ++r) {
    const auto [r0, fy] = detail::locate(ys[r], src.rows);
    for (std::size_t c = 0; c < level.cols; ++c) {
      const auto [c0, fx] = detail::locate(xs[c], src.cols);
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const std::size_t idx[4] = {r0 * src.cols + c0, r0 * src.cols + c0 + 1,
                                  (r0 + 1) * src.cols + c0, (r0 + 1) * src.cols + c0 + 1};
      bool ok = true;
      NormCoord p{};
      for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.0) continue;
        ok = ok && field.valid[idx[k]];
        p = p + w[k] * field.points[idx[k]];
      }
      if (ok) {
        out.at(r, c) = p;
        out.valid[r * level.cols + c] = 1;
      }
    }
  }
  return out;
}

/// Approximates the inverse at each reduced resolution Grid(ceil(H/d), ceil(W/d))
/// by bilinear downsampling of the full-resolution field.
inline std::vector<InverseWarpField> pyramid_inverse(const InverseWarpField& field,
                                                     std::span<const std::size_t> divisors) {
  std::vector<InverseWarpField> levels;
  levels.reserve(divisors.size());
  for (const std::size_t d : divisors) {
    if (d == 0) throw InvalidArgument("pyramid divisor must be positive");
    const GridSpec level{reduced_size(field.spec.rows, d), reduced_size(field.spec.cols, d)};
    if (level.rows < 2 || level.cols < 2) {
      throw InvalidArgument("pyramid divisor " + std::to_string(d) +
                            " leaves fewer than 2 samples per axis");
    }
    levels.push_back(d == 1 ? field : downsample_field(field, level));
  }
  return levels;
}

/// Mean Euclidean distance in pixels between two fields over their commonly
/// valid points. `image_dims` = (height, width) of the pixel frame; a
/// normalized offset of 1/width counts as one pixel.
inline double pyramid_inverse_error(const InverseWarpField& approx, const InverseWarpField& exact,
                                    std::pair<std::size_t, std::size_t> image_dims) {
  if (!(approx.spec == exact.spec)) throw InvalidArgument("field grids differ");
  const double sh = static_cast<double>(image_dims.first);
  const double sw = static_cast<double>(image_dims.second);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < approx.points.size(); ++i) {
    if (!approx.valid[i] || !exact.valid[i]) continue;
    const NormCoord d = approx.points[i] - exact.points[i];
    sum += std::hypot(d.x * sw, d.y * sh);
    ++n;
  }
  if (n == 0) throw EmptyDomain("no commonly valid points between the two fields");
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Zoom / unzoom pipeline

/// A forward warp built from saliency, separable or not.
struct Warp {
  WarpGrid grid;
  std::optional<SeparableWarp> axes;  // set for separable warps

  bool separable() const { return axes.has_value(); }

  static Warp from_separable(SeparableWarp w) {
    WarpGrid g = to_warp_grid(w);
    return {std::move(g), std::move(w)};
  }
  static Warp from_grid(WarpGrid g) { return {std::move(g), std::nullopt}; }

  /// Piecewise forward map T~ at p.
  NormCoord forward(NormCoord p) const {
    if (axes) return {evaluate_axis(axes->xs, p.x), evaluate_axis(axes->ys, p.y)};
    return evaluate_piecewise(grid, p);
  }
};

struct ZoomConfig {
  GridSpec grid{31, 51};
  AttractionKernel kernel{};
  double scale = 1.0;
  bool separable = true;
  bool anti_cropping = true;
  Marginalization marginalize = Marginalization::max;
  std::size_t threads = 1;

  void validate() const {
    grid.validate("control grid");
    kernel.validate();
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be positive");
    if (threads == 0) throw InvalidArgument("thread count must be positive");
  }
};

inline Warp make_warp(const SaliencyMap& s, const ZoomConfig& cfg) {
  cfg.validate();
  if (cfg.separable) {
    return Warp::from_separable(
        lz_warp_separable(s, cfg.marginalize, cfg.kernel, cfg.kernel, cfg.grid, cfg.anti_cropping));
  }
  return Warp::from_grid(lz_warp(s, cfg.kernel, cfg.grid, cfg.anti_cropping));
}

/// Forward sampling field T~[Grid(target)].
inline CoordField forward_field(const Warp& w, const GridSpec& target, std::size_t threads = 1) {
  return upsample_grid(w.grid, target, threads);
}

/// Left inverse T~^-1[Grid(target)].
inline InverseWarpField inverse_field(const Warp& w, const GridSpec& target,
                                      std::size_t threads = 1) {
  if (w.axes) return invert_separable(*w.axes, target);
  return invert_nonseparable(w.grid, target, threads);
}

struct LeftInverseReport {
  double max_error = 0.0;  // max |T~(T~^-1(x)) - x| over valid points, normalized units
  double coverage = 0.0;   // fraction of valid points
};

inline LeftInverseReport left_inverse_report(const Warp& w, const InverseWarpField& inv) {
  LeftInverseReport rep;
  const auto xs = make_axis(inv.spec.cols);
  const auto ys = make_axis(inv.spec.rows);
  std::size_t valid = 0;
  for (std::size_t r = 0; r < inv.spec.rows; ++r) {
    for (std::size_t c = 0; c < inv.spec.cols; ++c) {
      if (!inv.is_valid(r, c)) continue;
      ++valid;
      rep.max_error = std::max(rep.max_error, distance(w.forward(inv.at(r, c)), {xs[c], ys[r]}));
    }
  }
  rep.coverage = static_cast<double>(valid) / static_cast<double>(inv.spec.size());
  return rep;
}

inline GridSpec scaled_spec(std::size_t height, std::size_t width, double scale) {
  auto dim = [scale](std::size_t n) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(static_cast<double>(n) * scale)));
  };
  return {dim(height), dim(width)};
}

template <typename T>
struct ZoomResult {
  ImageTensor<T> zoomed;
  ImageTensor<T> unzoomed;
  Warp warp;
  CoordField forward;
  InverseWarpField inverse;
};

/// Zooms img by the saliency-driven warp at cfg.scale, then unzooms the
/// result back onto the original resolution through the left inverse.
template <typename T>
ZoomResult<T> zoom_unzoom(const ImageTensor<T>& img, const SaliencyMap& s, const ZoomConfig& cfg) {
  Warp warp = make_warp(s, cfg);
  const GridSpec zoomed_spec = scaled_spec(img.height(), img.width(), cfg.scale);
  const GridSpec original{std::max<std::size_t>(img.height(), 2),
                          std::max<std::size_t>(img.width(), 2)};
  CoordField fwd = forward_field(warp, zoomed_spec, cfg.threads);
  ImageTensor<T> zoomed = resample(img, fwd, cfg.threads);
  InverseWarpField inv = inverse_field(warp, original, cfg.threads);
  ImageTensor<T> unzoomed = resample(zoomed, inv, cfg.threads);
  return {std::move(zoomed), std::move(unzoomed), std::move(warp), std::move(fwd), std::move(inv)};
}

}  // namespace lzu
