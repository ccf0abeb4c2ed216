// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Fixed saliency generators: box KDE and semantic-boundary aggregation.

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/zoom.hpp>

#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lzu {

/// Axis-aligned box in normalized coordinates (center and extent).
struct Box2D {
  double cx = 0.5, cy = 0.5;
  double w = 0.1, h = 0.1;

  void validate() const {
    auto in01 = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in01(cx) || !in01(cy)) throw ValidationError("box center outside [0, 1]");
    if (!in01(w) || !in01(h) || !(w > 0.0) || !(h > 0.0)) {
      throw ValidationError("box extent must lie in (0, 1]");
    }
  }
};

struct KdeParams {
  double amplitude = 1.0;
  /// Gaussian bandwidth in pixels of the reference resolution.
  double bandwidth = 64.0;

  void validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw InvalidArgument("KDE amplitude must be positive");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("KDE bandwidth must be positive");
  }
};

/// S(x) = 1 + a * sum_i exp(-|x - c_i|^2 / (2 b^2)), distances in pixels of a
/// reference image of ref_dims = (height, width). Boxes contribute by center.
inline SaliencyMap kde_saliency(const std::vector<Box2D>& boxes, const KdeParams& p,
                                const GridSpec& out, std::pair<std::size_t, std::size_t> ref_dims) {
  p.validate();
  out.validate("saliency grid");
  if (ref_dims.first == 0 || ref_dims.second == 0) {
    throw InvalidArgument("reference resolution must be positive");
  }
  for (const auto& b : boxes) b.validate();
  const double ref_h = static_cast<double>(ref_dims.first);
  const double ref_w = static_cast<double>(ref_dims.second);
  const double inv2b2 = 1.0 / (2.0 * p.bandwidth * p.bandwidth);
  std::vector<double> v(out.size(), 1.0);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const double y = grid_coord(r, out.rows);
    for (std::size_t c = 0; c < out.cols; ++c) {
      const double x = grid_coord(c, out.cols);
      double acc = 0.0;
      for (const auto& b : boxes) {
        const double dx = (x - b.cx) * ref_w;
        const double dy = (y - b.cy) * ref_h;
        acc += std::exp(-(dx * dx + dy * dy) * inv2b2);
      }
      v[r * out.cols + c] += p.amplitude * acc;
    }
  }
  return SaliencyMap(out.rows, out.cols, std::move(v));
}

/// Parses one box per line: "cx cy w h". Blank lines and lines starting with
/// '#' are skipped.
inline std::vector<Box2D> parse_boxes(std::istream& in) {
  std::vector<Box2D> boxes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Box2D b;
    std::string extra;
    if (!(ls >> b.cx >> b.cy >> b.w >> b.h) || (ls >> extra)) {
      throw ValidationError("malformed box on line " + std::to_string(lineno) +
                            ": expected four decimal fields");
    }
    try {
      b.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    boxes.push_back(b);
  }
  return boxes;
}

/// Integer label image, row-major.
struct LabelGrid {
  std::size_t rows = 0, cols = 0;
  std::vector<std::int32_t> labels;

  std::int32_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
};

namespace detail {

// Overlap weights of an exact box filter reducing n inputs to m outputs:
// output i averages the continuous interval [i n/m, (i+1) n/m).
struct PoolTap {
  std::size_t first;
  std::vector<double> weights;  // sums to 1
};

inline std::vector<PoolTap> pool_taps(std::size_t n, std::size_t m) {
  std::vector<PoolTap> taps(m);
  const double ratio = static_cast<double>(n) / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = static_cast<double>(i) * ratio;
    const double b = static_cast<double>(i + 1) * ratio;
    const auto first = static_cast<std::size_t>(std::floor(a));
    const auto last = std::min(n - 1, static_cast<std::size_t>(std::ceil(b)) - 1);
    taps[i].first = first;
    for (std::size_t j = first; j <= last; ++j) {
      const double lo = std::max(a, static_cast<double>(j));
      const double hi = std::min(b, static_cast<double>(j + 1));
      taps[i].weights.push_back((hi - lo) / ratio);
    }
  }
  return taps;
}

}  // namespace detail

/// Exact area-average pooling of a rows x cols scalar grid onto `out`.
inline std::vector<double> average_pool(std::span<const double> values, std::size_t rows,
                                        std::size_t cols, const GridSpec& out) {
  if (out.rows > rows || out.cols > cols) {
    throw InvalidArgument("average pool target is larger than its input");
  }
  const auto ty = detail::pool_taps(rows, out.rows);
  const auto tx = detail::pool_taps(cols, out.cols);
  std::vector<double> tmp(rows * out.cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      for (std::size_t k = 0; k < tx[c].weights.size(); ++k)
        tmp[r * out.cols + c] += tx[c].weights[k] * values[r * cols + tx[c].first + k];
  std::vector<double> res(out.size(), 0.0);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t k = 0; k < ty[r].weights.size(); ++k)
      for (std::size_t c = 0; c < out.cols; ++c)
        res[r * out.cols + c] += ty[r].weights[k] * tmp[(ty[r].first + k) * out.cols + c];
  return res;
}

/// Pixels that differ from at least one of their (up to) eight neighbors get
/// boundary_value, all others background_value; the result is average-pooled
/// to `out`.
inline SaliencyMap boundary_saliency(const LabelGrid& labels, double boundary_value,
                                     double background_value, const GridSpec& out) {
  if (labels.rows == 0 || labels.cols == 0 || labels.labels.size() != labels.rows * labels.cols) {
    throw InvalidArgument("label grid is empty or inconsistent");
  }
  if (!(background_value > 0.0) || !(boundary_value > background_value)) {
    throw InvalidArgument("need boundary_value > background_value > 0");
  }
  out.validate("saliency grid");
  if (out.rows > labels.rows || out.cols > labels.cols) {
    throw InvalidArgument("saliency grid is larger than the label grid");
  }
  const std::size_t h = labels.rows, w = labels.cols;
  std::vector<double> intensity(h * w, background_value);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const auto here = labels.at(r, c);
      bool edge = false;
      for (int dr = -1; dr <= 1 && !edge; ++dr) {
        for (int dc = -1; dc <= 1 && !edge; ++dc) {
          const long long rr = static_cast<long long>(r) + dr;
          const long long cc = static_cast<long long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long long>(h) || cc >= static_cast<long long>(w)) continue;
          edge = labels.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) != here;
        }
      }
      if (edge) intensity[r * w + c] = boundary_value;
    }
  }
  return SaliencyMap(out.rows, out.cols, average_pool(intensity, h, w, out));
}

/// Baseline 1 plus `bumps` random isotropic Gaussian bumps; used by the
/// randomized diagnostics.
inline SaliencyMap random_smooth_saliency(const GridSpec& spec, std::mt19937_64& rng,
                                          int bumps = 4, double max_amplitude = 4.0) {
  spec.validate("saliency grid");
  std::uniform_real_distribution<double> pos(0.05, 0.95), amp(0.5, max_amplitude),
      width(0.08, 0.3);
  std::vector<double> cx(bumps), cy(bumps), a(bumps), s(bumps);
  for (int i = 0; i < bumps; ++i) {
    cx[i] = pos(rng);
    cy[i] = pos(rng);
    a[i] = amp(rng);
    s[i] = width(rng);
  }
  std::vector<double> v(spec.size(), 1.0);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double y = grid_coord(r, spec.rows);
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const double x = grid_coord(c, spec.cols);
      for (int i = 0; i < bumps; ++i) {
        const double dx = x - cx[i], dy = y - cy[i];
        v[r * spec.cols + c] += a[i] * std::exp(-(dx * dx + dy * dy) / (2 * s[i] * s[i]));
      }
    }
  }
  return SaliencyMap(spec.rows, spec.cols, std::move(v));
}

/// 1 + amplitude * exp(-|x - (0.5, 0.5)|^2 / (2 sigma^2)), sigma normalized.
inline SaliencyMap centered_bump_saliency(const GridSpec& spec, double amplitude, double sigma) {
  spec.validate("saliency grid");
  std::vector<double> v(spec.size());
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double dy = grid_coord(r, spec.rows) - 0.5;
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const double dx = grid_coord(c, spec.cols) - 0.5;
      v[r * spec.cols + c] = 1.0 + amplitude * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    }
  }
  return SaliencyMap(spec.rows, spec.cols, std::move(v));
}

}  // namespace lzu
