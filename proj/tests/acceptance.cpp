// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "commands.hpp"

#include <lzu/lzu.hpp>
#include <lzu/png.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lzu;

namespace {

const GridSpec kControl{31, 51};
const GridSpec kTarget{600, 960};

std::size_t worker_count() { return std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

// 1 -------------------------------------------------------------------------

Outcome inverse_bilinear_round_trip() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0, 1), jitter(-0.4, 0.4), scale(1e-3, 10.0), off(-5, 5);
  constexpr int kQuads = 100000;
  std::vector<BilinearTile> tiles;
  std::vector<std::pair<double, double>> uv;
  tiles.reserve(kQuads);
  while (tiles.size() < kQuads) {
    const double s = scale(rng);
    const NormCoord o{off(rng), off(rng)};
    auto corner = [&](double x, double y) { return o + s * NormCoord{x + jitter(rng), y + jitter(rng)}; };
    BilinearTile t{corner(0, 0), corner(1, 0), corner(0, 1), corner(1, 1), 0.0, 1.0, 0.0, 1.0};
    const NormCoord q[4] = {t.bl, t.br, t.tr, t.tl};
    bool convex = true;
    for (int k = 0; k < 4 && convex; ++k) {
      const NormCoord a = q[k] - q[(k + 3) % 4], b = q[(k + 1) % 4] - q[k];
      convex = (a.x * b.y - a.y * b.x) > 1e-3 * s * s;
    }
    if (!convex) continue;
    tiles.push_back(t);
    uv.emplace_back(u01(rng), u01(rng));
  }
  std::vector<NormCoord> pts(kQuads);
  for (int i = 0; i < kQuads; ++i) {
    const auto& t = tiles[i];
    pts[i] = oracle::quad_forward(t.bl, t.br, t.tl, t.tr, uv[i].first, uv[i].second);
  }
  double worst = 0.0;
  int missing = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < kQuads; ++i) {
    const auto p = inverse_bilinear(tiles[i], pts[i]);
    if (!p) {
      ++missing;
      continue;
    }
    worst = std::max({worst, std::abs(p->x - uv[i].first), std::abs(p->y - uv[i].second)});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {missing == 0 && worst < 1e-9 && secs < 5.0,
          fmt("%d convex quads, max coord error %.3e (< 1e-9), %d misses, %.3f s (< 5 s)", kQuads, worst, missing,
              secs)};
}

// 2 -------------------------------------------------------------------------

Outcome left_inverse_law() {
  std::mt19937_64 rng(7);
  double worst_sep = 0, worst_non = 0, min_cov = 1;
  for (int i = 0; i < 50; ++i) {
    const auto s = random_smooth_saliency(kControl, rng);
    ZoomConfig cfg;
    cfg.kernel = {i % 2 == 0 ? 10.0 : 22.0};
    cfg.threads = worker_count();
    for (bool sep : {true, false}) {
      cfg.separable = sep;
      const Warp w = make_warp(s, cfg);
      const auto rep = left_inverse_report(w, inverse_field(w, kTarget, cfg.threads));
      (sep ? worst_sep : worst_non) = std::max(sep ? worst_sep : worst_non, rep.max_error);
      min_cov = std::min(min_cov, rep.coverage);
    }
  }
  return {worst_sep < 1e-10 && worst_non < 1e-6 && min_cov == 1.0,
          fmt("50 maps on Grid(600,960): separable %.3e (< 1e-10), nonseparable %.3e (< 1e-6), min coverage %.4f",
              worst_sep, worst_non, min_cov)};
}

// 3 -------------------------------------------------------------------------

Outcome cross_implementation() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> fw(8.0, 30.0);
  double worst = 0;
  bool masks_equal = true;
  for (int i = 0; i < 20; ++i) {
    const auto s = random_smooth_saliency(kControl, rng);
    const AttractionKernel k{fw(rng)};
    const bool ac = i % 4 != 3;
    const auto w = lz_warp_separable(s, i % 2 ? Marginalization::mean : Marginalization::max, k, k, kControl, ac);
    const auto a = invert_separable(w, kTarget);
    const auto b = invert_nonseparable(to_warp_grid(w), kTarget, worker_count());
    masks_equal = masks_equal && a.valid == b.valid;
    for (std::size_t j = 0; j < a.points.size(); ++j) worst = std::max(worst, distance(a.points[j], b.points[j]));
  }
  return {masks_equal && worst < 1e-6,
          fmt("20 separable warps: max inverter disagreement %.3e (< 1e-6), validity masks %s", worst,
              masks_equal ? "identical" : "differ")};
}

// 4 -------------------------------------------------------------------------

Outcome pyramid_error() {
  const auto s = cli::synthetic_saliency("horizon", kControl, 0);
  const Warp w = make_warp(s, ZoomConfig{});
  const auto rows = cli::pyramid_errors(w, kTarget, {2, 4, 8}, worker_count());
  bool ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ok = ok && rows[i].error_px < 0.1;
    if (i > 0) ok = ok && rows[i].error_px <= rows[i - 1].error_px;
  }
  return {ok, fmt("horizon KDE: d=2 %.3e px, d=4 %.3e px, d=8 %.3e px (non-increasing, < 0.1; reference "
                  "0.0274, 0.0065, 0.0028)",
                  rows[0].error_px, rows[1].error_px, rows[2].error_px)};
}

// 5 -------------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sal(0.2, 5.0), fw(6.0, 30.0);
  std::uniform_int_distribution<std::size_t> nn(8, 51);
  double worst_rel = 0, worst_euler = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(nn(rng));
    for (auto& v : s) v = sal(rng);
    const AttractionKernel k{fw(rng)};
    const std::size_t n_out = nn(rng);
    const bool ac = trial % 2 == 0;
    const auto j = warp_jacobian_separable(s, k, n_out, ac);
    const auto rep = fd_check<long double>(
        [&](std::span<const long double> x) { return oracle::axis_warp_ld(x, k.fwhm, k.truncation, n_out, ac); },
        s, j, 1e-6, 1e-4);
    worst_rel = std::max(worst_rel, rep.max_rel_error);
    for (std::size_t r = 0; r < j.rows; ++r) {
      double e = 0;
      for (std::size_t m = 0; m < j.cols; ++m) e += s[m] * j.at(r, m);
      worst_euler = std::max(worst_euler, std::abs(e));
    }
  }
  return {worst_rel < 1e-4 && worst_euler < 1e-10,
          fmt("100 trials: max relative error %.3e (< 1e-4), max |sum S J| %.3e (< 1e-10)", worst_rel, worst_euler)};
}

// 6 -------------------------------------------------------------------------

double max_diff(const WarpGrid& a, const WarpGrid& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    d = std::max({d, std::abs(a.points[i].x - b.points[i].x), std::abs(a.points[i].y - b.points[i].y)});
  return d;
}

WarpGrid sep_grid(const SaliencyMap& s, const AttractionKernel& k, bool ac) {
  return to_warp_grid(lz_warp_separable(s, Marginalization::max, k, k, kControl, ac));
}

Outcome warp_invariances() {
  std::mt19937_64 rng(3);
  double scale_err = 0, ident_err = 0, mirror_err = 0;
  bool aligned = true;
  for (int i = 0; i < 10; ++i) {
    const auto s = random_smooth_saliency(kControl, rng);
    for (double fwhm : {10.0, 22.0}) {
      const AttractionKernel k{fwhm};
      for (bool ac : {true, false}) {
        scale_err = std::max(scale_err, max_diff(lz_warp(s, k, kControl, ac), lz_warp(s.scaled(3.0), k, kControl, ac)));
        scale_err = std::max(scale_err, max_diff(sep_grid(s, k, ac), sep_grid(s.scaled(3.0), k, ac)));
        for (bool sep : {true, false}) {
          const auto g = sep ? sep_grid(s, k, ac) : lz_warp(s, k, kControl, ac);
          const auto m = sep ? sep_grid(s.mirrored_x(), k, ac) : lz_warp(s.mirrored_x(), k, kControl, ac);
          for (std::size_t r = 0; r < kControl.rows; ++r)
            for (std::size_t c = 0; c < kControl.cols; ++c) {
              const NormCoord p = g.at(r, c), q = m.at(r, kControl.cols - 1 - c);
              mirror_err = std::max({mirror_err, std::abs(p.x - (1.0 - q.x)), std::abs(p.y - q.y)});
            }
        }
        const auto g = sep_grid(s, k, ac);
        for (std::size_t r = 0; r < kControl.rows; ++r)
          for (std::size_t c = 0; c < kControl.cols; ++c)
            aligned = aligned && g.at(r, c).x == g.at(0, c).x && g.at(r, c).y == g.at(r, 0).y;
      }
    }
  }
  for (double fwhm : {4.0, 10.0, 22.0, 80.0}) {
    const auto u = SaliencyMap::uniform(kControl.rows, kControl.cols, 0.7);
    const auto id = WarpGrid::identity(kControl);
    ident_err = std::max(ident_err, max_diff(lz_warp(u, {fwhm}, kControl, true), id));
    ident_err = std::max(ident_err, max_diff(sep_grid(u, {fwhm}, true), id));
  }
  return {scale_err < 1e-12 && ident_err < 1e-12 && mirror_err < 1e-12 && aligned,
          fmt("S vs 3S %.2e, uniform identity %.2e, mirror %.2e (all < 1e-12), separable axis-aligned: %s", scale_err,
              ident_err, mirror_err, aligned ? "yes" : "no")};
}

// 7 -------------------------------------------------------------------------

Outcome information_retention() {
  const fs::path dir = fs::temp_directory_path() / "lzu_acceptance_retention";
  fs::create_directories(dir);
  const std::size_t h = 1200, w = 1920;
  const std::size_t b0 = h * 2 / 5, b1 = h * 3 / 5;
  Image img(h, w, 1, 128.0f);
  // Horizontal stripes with a 4.5 px period: above the Nyquist limit of a
  // uniform half-scale grid, below that of a grid magnified about 2x.
  const double k = 2 * std::numbers::pi / 4.5;
  for (std::size_t r = b0; r < b1; ++r)
    for (std::size_t c = 0; c < w; ++c)
      img.at(r, c) = static_cast<float>(128 + 90 * std::sin(k * static_cast<double>(r)));
  const auto in = (dir / "in.png").string();
  png::write_image(in, img);
  const std::string threads = std::to_string(worker_count());
  auto pipeline = [&](const std::string& kind) -> double {
    const auto z = (dir / (kind + "_z.png")).string(), f = (dir / (kind + ".lzu")).string(),
               u = (dir / (kind + "_u.png")).string();
    std::ostringstream out, err;
    if (cli::run({"warp", "--image", in, "--synthetic", kind, "--scale", "0.5", "--threads", threads, "--out", z,
                  "--field", f},
                 out, err) != 0 ||
        cli::run({"unwarp", "--image", z, "--field", f, "--out", u, "--threads", threads}, out, err) != 0) {
      std::cerr << err.str();
      return std::nan("");
    }
    const Image back = png::read_image(u), ref = png::read_image(in);
    double se = 0;
    for (std::size_t r = b0; r < b1; ++r)
      for (std::size_t c = 0; c < w; ++c) se += std::pow(back.at(r, c) - ref.at(r, c), 2);
    const double mse = se / static_cast<double>((b1 - b0) * w);
    return 10 * std::log10(255.0 * 255.0 / mse);
  };
  const double lz = pipeline("centered"), base = pipeline("uniform");
  fs::remove_all(dir);
  return {lz - base >= 1.0,
          fmt("1200x1920, scale 0.5, central-band PSNR: centered %.2f dB vs uniform %.2f dB (gain %.2f, >= 1)", lz,
              base, lz - base)};
}

// 8 -------------------------------------------------------------------------

Outcome latency_harness() {
  const cli::RunConfig cfg;
  const auto rows = cli::run_bench(cfg, kTarget, 30, 0);
  double worst_ratio = 0, sep = 0, nonsep = 0;
  for (const auto& r : rows) {
    worst_ratio = std::max(worst_ratio, r.p95_ms / r.median_ms);
    if (r.operation == "separable_inversion") sep = r.median_ms;
    if (r.operation == "nonseparable_inversion") nonsep = r.median_ms;
  }
  const auto doubled = cli::run_bench(cfg, {600, 1920}, 30, 0);
  double sep2 = 0;
  for (const auto& r : doubled)
    if (r.operation == "separable_inversion") sep2 = r.median_ms;
  const double growth = sep2 / sep;
  return {worst_ratio < 2.0 && growth <= 2.5,
          fmt("max p95/median %.2f (< 2), separable inversion %.3f -> %.3f ms at 2x pixels (x%.2f, <= 2.5); "
              "nonseparable inversion %.2f ms (reference figure 12.6 ms, not gated)",
              worst_ratio, sep, sep2, growth, nonsep)};
}

// 9 -------------------------------------------------------------------------

Outcome magnification_audit() {
  std::mt19937_64 rng(9);
  double worst_sum = 0;
  for (int i = 0; i < 10; ++i) {
    const auto s = random_smooth_saliency(kControl, rng);
    for (bool sep : {true, false}) {
      ZoomConfig cfg;
      cfg.separable = sep;
      cfg.kernel = {i % 2 ? 10.0 : 22.0};
      const auto st = cli::magnification_stats(magnification_map(make_warp(s, cfg).grid));
      worst_sum = std::max(worst_sum, std::abs(st.inverse_area_sum - 1.0));
    }
  }
  const auto st =
      cli::magnification_stats(magnification_map(make_warp(cli::synthetic_saliency("centered", kControl, 0), {}).grid));
  return {worst_sum < 1e-6 && st.center > 1.5 && st.center < 2.5,
          fmt("inverse-area sums within %.2e of 1 (< 1e-6), centered saliency center ratio %.3f in (1.5, 2.5), "
              "corners %.3f",
              worst_sum, st.center, st.corners[0])};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"inverse-bilinear round trip", inverse_bilinear_round_trip},
      {"left-inverse law", left_inverse_law},
      {"cross-implementation agreement", cross_implementation},
      {"pyramid error", pyramid_error},
      {"gradient check", gradient_check},
      {"warp invariances", warp_invariances},
      {"information retention", information_retention},
      {"latency harness", latency_harness},
      {"magnification audit", magnification_audit},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
