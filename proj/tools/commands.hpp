// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <lzu/lzu.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lzu::cli {

/// Exit statuses of the lzu tool.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kValidation = 2,
  kStructure = 3,
};

/// Warp hyperparameters shared by the commands.
struct RunConfig {
  GridSpec grid{31, 51};
  double fwhm = 22.0;
  double scale = 1.0;
  bool separable = true;
  bool anti_cropping = true;
  Marginalization marginalize = Marginalization::max;
  std::size_t threads = 1;

  ZoomConfig zoom() const;
};

/// "HxW" -> GridSpec with both dimensions at least `min_dim`.
GridSpec parse_dims(const std::string& text, std::size_t min_dim = 2);

/// "2,4,8" -> {2, 4, 8}; every entry must be a positive integer.
std::vector<std::size_t> parse_divisors(const std::string& text);

/// Built-in saliency maps selectable with --synthetic:
///   uniform   constant 1
///   random    smooth random bumps drawn from `seed`
///   centered  KDE of a single centered box, amplitude 2, bandwidth 256 px
///   horizon   KDE of nine boxes on a horizontal band, amplitude 1, bandwidth 64 px
/// KDE bandwidths refer to a 1200x1920 reference image.
SaliencyMap synthetic_saliency(const std::string& kind, const GridSpec& grid, std::uint64_t seed);

struct PyramidRow {
  std::size_t divisor;
  GridSpec level;
  double error_px;
};

/// Exact inverse on `target`, its pyramid at each divisor, and the mean pixel
/// error of every level against the exact inverse at the level's resolution.
std::vector<PyramidRow> pyramid_errors(const Warp& w, const GridSpec& target,
                                       const std::vector<std::size_t>& divisors, std::size_t threads);

struct BenchRow {
  std::string operation;
  double median_ms;
  double p95_ms;
  std::size_t calls_per_sample;
};

/// Times the warp pipeline stages for a random smooth saliency. Each sample
/// averages enough back-to-back calls to last at least about 2 ms; warmup
/// calls are discarded. Stages with an in-place variant write into buffers
/// allocated once up front.
std::vector<BenchRow> run_bench(const RunConfig& cfg, const GridSpec& target, std::size_t repetitions,
                                std::uint64_t seed);

struct MagnificationStats {
  double center;
  double corners[4];  // top-left, top-right, bottom-left, bottom-right
  double min, max;
  double inverse_area_sum;
};

MagnificationStats magnification_stats(const TileMap& m);

/// Color of a magnification ratio: log2 ratio clamped to [-2, 2] mapped
/// linearly from blue (0, 0, 255) through white at ratio 1 to red (255, 0, 0).
void heatmap_color(double ratio, float rgb[3]);

/// Runs the tool with argv-style `args` (program name excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lzu::cli
