// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <lzu/png.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace lzu::cli {

ZoomConfig RunConfig::zoom() const {
  ZoomConfig z;
  z.grid = grid;
  z.kernel = AttractionKernel{fwhm};
  z.scale = scale;
  z.separable = separable;
  z.anti_cropping = anti_cropping;
  z.marginalize = marginalize;
  z.threads = threads;
  z.validate();
  return z;
}

GridSpec parse_dims(const std::string& text, std::size_t min_dim) {
  const auto x = text.find_first_of("xX");
  auto num = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) {
      throw ValidationError("expected dimensions HxW, got '" + text + "'");
    }
    return static_cast<std::size_t>(std::stoul(s));
  };
  if (x == std::string::npos) throw ValidationError("expected dimensions HxW, got '" + text + "'");
  GridSpec g{num(text.substr(0, x)), num(text.substr(x + 1))};
  if (g.rows < min_dim || g.cols < min_dim) {
    throw ValidationError("dimensions '" + text + "' must be at least " + std::to_string(min_dim));
  }
  return g;
}

std::vector<std::size_t> parse_divisors(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos || item.size() > 9) {
      throw ValidationError("invalid divisor '" + item + "'");
    }
    const auto d = static_cast<std::size_t>(std::stoul(item));
    if (d == 0) throw ValidationError("divisor must be positive");
    out.push_back(d);
  }
  if (out.empty()) throw ValidationError("no divisors given");
  return out;
}

namespace {

constexpr std::pair<std::size_t, std::size_t> kReferenceDims{1200, 1920};

std::vector<Box2D> horizon_boxes() {
  std::vector<Box2D> b;
  for (int i = 0; i < 9; ++i) b.push_back({0.1 + 0.1 * i, 0.55, 0.06, 0.05});
  return b;
}

}  // namespace

SaliencyMap synthetic_saliency(const std::string& kind, const GridSpec& grid, std::uint64_t seed) {
  if (kind == "uniform") return SaliencyMap::uniform(grid.rows, grid.cols);
  if (kind == "random") {
    std::mt19937_64 rng(seed);
    return random_smooth_saliency(grid, rng);
  }
  if (kind == "centered") return kde_saliency({{0.5, 0.5, 0.2, 0.2}}, {2.0, 256.0}, grid, kReferenceDims);
  if (kind == "horizon") return kde_saliency(horizon_boxes(), {1.0, 64.0}, grid, kReferenceDims);
  throw ValidationError("unknown synthetic saliency '" + kind + "'");
}

std::vector<PyramidRow> pyramid_errors(const Warp& w, const GridSpec& target,
                                       const std::vector<std::size_t>& divisors, std::size_t threads) {
  const auto full = inverse_field(w, target, threads);
  const auto levels = pyramid_inverse(full, divisors);
  std::vector<PyramidRow> rows;
  for (std::size_t i = 0; i < divisors.size(); ++i) {
    const GridSpec spec = levels[i].spec;
    const auto exact = inverse_field(w, spec, threads);
    rows.push_back({divisors[i], spec, pyramid_inverse_error(levels[i], exact, {spec.rows, spec.cols})});
  }
  return rows;
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
BenchRow time_op(const std::string& name, std::size_t repetitions, F&& f) {
  auto once = [&] {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };
  once();
  const double probe = std::max(once(), 1e-6);
  const auto calls = static_cast<std::size_t>(std::clamp(std::ceil(2.0 / probe), 1.0, 1e6));
  std::vector<double> samples;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto t0 = Clock::now();
    for (std::size_t c = 0; c < calls; ++c) f();
    samples.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count() /
                      static_cast<double>(calls));
  }
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
  };
  return {name, quantile(0.5), quantile(0.95), calls};
}

template <typename T>
void keep(const T& v) {
  static volatile std::size_t sink;
  sink = sink + v.size();
}

}  // namespace

std::vector<BenchRow> run_bench(const RunConfig& cfg, const GridSpec& target, std::size_t repetitions,
                                std::uint64_t seed) {
  if (repetitions < 10) throw ValidationError("bench needs at least 10 repetitions");
  target.validate("bench target");
  const ZoomConfig z = cfg.zoom();
  const SaliencyMap s = synthetic_saliency("random", z.grid, seed);
  const WarpGrid grid = lz_warp(s, z.kernel, z.grid, z.anti_cropping);
  const SeparableWarp sep =
      lz_warp_separable(s, z.marginalize, z.kernel, z.kernel, z.grid, z.anti_cropping);
  const CoordField fwd = upsample_grid(grid, target, z.threads);
  Image img(target.rows, target.cols, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>((i * 2654435761u) % 256);

  std::vector<BenchRow> rows;
  rows.push_back(time_op("forward_grid_build", repetitions,
                         [&] { keep(lz_warp(s, z.kernel, z.grid, z.anti_cropping).points); }));
  rows.push_back(time_op("separable_grid_build", repetitions, [&] {
    keep(lz_warp_separable(s, z.marginalize, z.kernel, z.kernel, z.grid, z.anti_cropping).xs);
  }));
  CoordField up_out(target, true), inv_out(target);
  Image res_out(target.rows, target.cols, 3);
  rows.push_back(time_op("grid_upsample", repetitions, [&] { upsample_grid_into(grid, up_out, z.threads); }));
  rows.push_back(time_op("separable_inversion", repetitions, [&] { invert_separable_into(sep, inv_out); }));
  rows.push_back(time_op("nonseparable_inversion", repetitions,
                         [&] { keep(invert_nonseparable(grid, target, z.threads).points); }));
  rows.push_back(time_op("resample", repetitions, [&] { resample_into(img, fwd, res_out, z.threads); }));
  return rows;
}

MagnificationStats magnification_stats(const TileMap& m) {
  MagnificationStats st{};
  const std::size_t th = m.tiles.rows, tw = m.tiles.cols;
  // Tiles touching the domain center: one or two per axis.
  const std::size_t r0 = (th - 1) / 2, r1 = th / 2, c0 = (tw - 1) / 2, c1 = tw / 2;
  st.center = (m.at(r0, c0) + m.at(r0, c1) + m.at(r1, c0) + m.at(r1, c1)) / 4.0;
  st.corners[0] = m.at(0, 0);
  st.corners[1] = m.at(0, tw - 1);
  st.corners[2] = m.at(th - 1, 0);
  st.corners[3] = m.at(th - 1, tw - 1);
  st.min = *std::min_element(m.values.begin(), m.values.end());
  st.max = *std::max_element(m.values.begin(), m.values.end());
  const double rect = 1.0 / static_cast<double>(th * tw);
  st.inverse_area_sum = 0.0;
  for (double v : m.values) st.inverse_area_sum += rect / v;
  return st;
}

void heatmap_color(double ratio, float rgb[3]) {
  const double t = (std::clamp(std::log2(ratio), -2.0, 2.0) + 2.0) / 4.0;
  if (t < 0.5) {
    const double a = t / 0.5;
    rgb[0] = static_cast<float>(255.0 * a);
    rgb[1] = static_cast<float>(255.0 * a);
    rgb[2] = 255.0f;
  } else {
    const double a = (1.0 - t) / 0.5;
    rgb[0] = 255.0f;
    rgb[1] = static_cast<float>(255.0 * a);
    rgb[2] = static_cast<float>(255.0 * a);
  }
}

// ---------------------------------------------------------------------------
// Command-line front end

namespace {

struct ConfigFlags {
  std::string grid = "31x51";
  RunConfig cfg;
  std::string marginalize = "max";

  void add(CLI::App* app, bool with_scale) {
    app->add_option("--grid", grid, "control grid HxW")->capture_default_str();
    app->add_option("--fwhm", cfg.fwhm, "attraction kernel FWHM in saliency cells")->capture_default_str();
    if (with_scale) app->add_option("--scale", cfg.scale, "zoomed size / input size")->capture_default_str();
    app->add_flag("--separable,!--nonseparable", cfg.separable, "separable (default) or full 2D warp");
    app->add_flag("--anti-crop,!--no-anti-crop", cfg.anti_cropping, "keep the whole image in view (default on)");
    app->add_option("--marginalize", marginalize, "separable marginal: max or mean")->capture_default_str();
    app->add_option("--threads", cfg.threads, "worker threads")->capture_default_str();
  }

  RunConfig resolve() {
    cfg.grid = parse_dims(grid);
    if (marginalize == "max") {
      cfg.marginalize = Marginalization::max;
    } else if (marginalize == "mean") {
      cfg.marginalize = Marginalization::mean;
    } else {
      throw ValidationError("--marginalize must be max or mean");
    }
    cfg.zoom();
    return cfg;
  }
};

struct SaliencyFlags {
  std::string file;
  std::string synthetic;
  std::uint64_t seed = 0;

  void add(CLI::App* app, const std::string& default_synthetic) {
    synthetic = default_synthetic;
    app->add_option("--saliency", file, "saliency dense-array file");
    app->add_option("--synthetic", synthetic, "built-in saliency: uniform, random, centered, horizon")
        ->capture_default_str();
    app->add_option("--seed", seed, "seed for --synthetic random")->capture_default_str();
  }

  SaliencyMap resolve(const GridSpec& grid) const {
    if (!file.empty()) return load_saliency(file);
    if (synthetic.empty()) throw ValidationError("no saliency given (use --saliency or --synthetic)");
    return synthetic_saliency(synthetic, grid, seed);
  }
};

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const DegenerateSaliency*>(&e)) return "DegenerateSaliency";
  if (dynamic_cast<const EmptyDomain*>(&e)) return "EmptyDomain";
  if (dynamic_cast<const FoldoverError*>(&e)) return "FoldoverError";
  if (dynamic_cast<const InjectivityError*>(&e)) return "InjectivityError";
  return "Error";
}

int report(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  nlohmann::json j{{"error", kind}, {"message", message}, {"exit", code}};
  err << j.dump() << '\n';
  return code;
}

void print_summary(std::ostream& out, const SaliencyMap& s) {
  const auto v = s.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  out << "saliency " << s.rows() << 'x' << s.cols() << " min=" << *lo << " max=" << *hi << " mean=" << mean
      << '\n';
}

std::string dims_str(std::size_t h, std::size_t w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Saliency-guided zoom warps and their piecewise-bilinear inverses", "lzu"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // saliency
  auto* sal = app.add_subcommand("saliency", "generate or validate a saliency map");
  sal->require_subcommand(1);
  std::string sal_out, boxes_file, kde_grid = "31x51", kde_ref = "1200x1920";
  KdeParams kde;
  auto* kde_cmd = sal->add_subcommand("kde", "Gaussian KDE over box centers");
  kde_cmd->add_option("--boxes", boxes_file, "text file, one 'cx cy w h' per line")->required();
  kde_cmd->add_option("--grid", kde_grid, "saliency grid HxW")->capture_default_str();
  kde_cmd->add_option("--amplitude", kde.amplitude)->capture_default_str();
  kde_cmd->add_option("--bandwidth", kde.bandwidth, "pixels of the reference image")->capture_default_str();
  kde_cmd->add_option("--ref", kde_ref, "reference image HxW")->capture_default_str();
  kde_cmd->add_option("--out", sal_out)->required();
  std::string labels_file, bnd_grid = "31x51";
  double boundary_value = 200.0, background_value = 1.0;
  auto* bnd_cmd = sal->add_subcommand("boundary", "segmentation-boundary saliency from a label PNG");
  bnd_cmd->add_option("--labels", labels_file, "single-channel label PNG")->required();
  bnd_cmd->add_option("--grid", bnd_grid, "saliency grid HxW")->capture_default_str();
  bnd_cmd->add_option("--boundary-value", boundary_value)->capture_default_str();
  bnd_cmd->add_option("--background-value", background_value)->capture_default_str();
  bnd_cmd->add_option("--out", sal_out)->required();
  std::string load_in;
  auto* load_cmd = sal->add_subcommand("load", "validate a saliency file and print its summary");
  load_cmd->add_option("--in", load_in)->required();
  load_cmd->add_option("--out", sal_out, "optional copy");

  // warp
  auto* warp_cmd = app.add_subcommand("warp", "zoom an image");
  ConfigFlags warp_cfg;
  SaliencyFlags warp_sal;
  std::string image_in, image_out, field_out, grid_in, grid_out;
  warp_cfg.add(warp_cmd, true);
  warp_sal.add(warp_cmd, "");
  warp_cmd->add_option("--image", image_in, "input PNG")->required();
  warp_cmd->add_option("--warp-grid", grid_in, "use this (h, w, 2) warp grid instead of a saliency");
  warp_cmd->add_option("--out", image_out, "zoomed PNG")->required();
  warp_cmd->add_option("--field", field_out, "write the inverse field for unwarp");
  warp_cmd->add_option("--grid-out", grid_out, "write the warp grid");

  // unwarp
  auto* unwarp_cmd = app.add_subcommand("unwarp", "resample an image through a field file");
  std::string field_in;
  std::size_t unwarp_threads = 1;
  unwarp_cmd->add_option("--image", image_in, "zoomed PNG")->required();
  unwarp_cmd->add_option("--field", field_in, "(H, W, 3) field written by warp --field")->required();
  unwarp_cmd->add_option("--out", image_out)->required();
  unwarp_cmd->add_option("--threads", unwarp_threads)->capture_default_str();

  // roundtrip
  auto* rt_cmd = app.add_subcommand("roundtrip", "left-inverse composition check");
  ConfigFlags rt_cfg;
  SaliencyFlags rt_sal;
  std::string target = "600x960";
  double tolerance = 1e-6;
  rt_cfg.add(rt_cmd, false);
  rt_sal.add(rt_cmd, "uniform");
  rt_cmd->add_option("--target", target, "inverse grid HxW")->capture_default_str();
  rt_cmd->add_option("--tolerance", tolerance)->capture_default_str();

  // pyramid-error
  auto* pyr_cmd = app.add_subcommand("pyramid-error", "pixel error of pyramid-downsampled inverses");
  ConfigFlags pyr_cfg;
  SaliencyFlags pyr_sal;
  std::string divisors = "2,4,8";
  pyr_cfg.add(pyr_cmd, false);
  pyr_sal.add(pyr_cmd, "horizon");
  pyr_cmd->add_option("--target", target, "full-resolution inverse grid HxW")->capture_default_str();
  pyr_cmd->add_option("--divisors", divisors)->capture_default_str();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "latency of the pipeline stages");
  ConfigFlags bench_cfg;
  std::size_t repetitions = 30;
  std::uint64_t bench_seed = 0;
  bench_cfg.add(bench_cmd, false);
  bench_cmd->add_option("--target", target, "output field HxW")->capture_default_str();
  bench_cmd->add_option("--repetitions", repetitions)->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed)->capture_default_str();

  // magnification
  auto* mag_cmd = app.add_subcommand("magnification", "per-tile magnification heatmap");
  ConfigFlags mag_cfg;
  SaliencyFlags mag_sal;
  std::string heat_out;
  std::size_t cell = 8;
  mag_cfg.add(mag_cmd, false);
  mag_sal.add(mag_cmd, "centered");
  mag_cmd->add_option("--out", heat_out, "heatmap PNG");
  mag_cmd->add_option("--cell", cell, "heatmap pixels per tile")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report(err, "UsageError", e.what(), kValidation);
  }

  try {
    if (sal->parsed()) {
      SaliencyMap s = SaliencyMap::uniform(2, 2);
      if (kde_cmd->parsed()) {
        std::ifstream in(boxes_file);
        if (!in) throw ValidationError("cannot open " + boxes_file);
        const auto boxes = parse_boxes(in);
        if (boxes.empty()) err << "warning: " << boxes_file << " holds no boxes; saliency is uniform\n";
        const GridSpec ref = parse_dims(kde_ref, 1);
        s = kde_saliency(boxes, kde, parse_dims(kde_grid), {ref.rows, ref.cols});
      } else if (bnd_cmd->parsed()) {
        s = boundary_saliency(png::read_labels(labels_file), boundary_value, background_value,
                              parse_dims(bnd_grid));
      } else {
        s = load_saliency(load_in);
      }
      if (!sal_out.empty()) save_saliency(s, sal_out);
      print_summary(out, s);
      return kOk;
    }

    if (warp_cmd->parsed()) {
      const RunConfig cfg = warp_cfg.resolve();
      const ZoomConfig z = cfg.zoom();
      const Image img = png::read_image(image_in);
      Warp warp;
      if (!grid_in.empty()) {
        WarpGrid g = warp_grid_from_dense(load_dense(grid_in));
        check_foldover(g);
        warp = Warp::from_grid(std::move(g));
      } else {
        warp = make_warp(warp_sal.resolve(z.grid), z);
      }
      const GridSpec zoomed_spec = scaled_spec(img.height(), img.width(), cfg.scale);
      const CoordField fwd = forward_field(warp, zoomed_spec, cfg.threads);
      png::write_image(image_out, resample(img, fwd, cfg.threads));
      out << "zoomed " << dims_str(img.height(), img.width()) << " -> "
          << dims_str(zoomed_spec.rows, zoomed_spec.cols) << '\n';
      if (!grid_out.empty()) save_dense(grid_out, to_dense(warp.grid));
      if (!field_out.empty()) {
        const InverseWarpField inv = inverse_field(warp, {img.height(), img.width()}, cfg.threads);
        save_dense(field_out, to_dense(inv));
        out << "inverse field " << dims_str(inv.spec.rows, inv.spec.cols) << " coverage="
            << static_cast<double>(inv.valid_count()) / static_cast<double>(inv.spec.size()) << '\n';
      }
      return kOk;
    }

    if (unwarp_cmd->parsed()) {
      if (unwarp_threads == 0) throw ValidationError("--threads must be positive");
      const Image img = png::read_image(image_in);
      const CoordField f = field_from_dense(load_dense(field_in));
      png::write_image(image_out, resample(img, f, unwarp_threads));
      out << "unzoomed " << dims_str(img.height(), img.width()) << " -> " << dims_str(f.spec.rows, f.spec.cols)
          << '\n';
      return kOk;
    }

    if (rt_cmd->parsed()) {
      const RunConfig cfg = rt_cfg.resolve();
      const GridSpec t = parse_dims(target);
      const Warp w = make_warp(rt_sal.resolve(cfg.grid), cfg.zoom());
      const auto rep = left_inverse_report(w, inverse_field(w, t, cfg.threads));
      out << std::setprecision(6) << "max_error=" << std::scientific << rep.max_error << std::defaultfloat
          << " coverage=" << rep.coverage << " tolerance=" << tolerance << '\n';
      return rep.max_error <= tolerance ? kOk : kCheckFailed;
    }

    if (pyr_cmd->parsed()) {
      const RunConfig cfg = pyr_cfg.resolve();
      const auto ds = parse_divisors(divisors);
      const Warp w = make_warp(pyr_sal.resolve(cfg.grid), cfg.zoom());
      out << "divisor level error_px\n";
      for (const auto& r : pyramid_errors(w, parse_dims(target), ds, cfg.threads)) {
        out << r.divisor << ' ' << dims_str(r.level.rows, r.level.cols) << ' ' << std::setprecision(6)
            << r.error_px << '\n';
      }
      return kOk;
    }

    if (bench_cmd->parsed()) {
      const RunConfig cfg = bench_cfg.resolve();
      const GridSpec t = parse_dims(target);
      const auto rows = run_bench(cfg, t, repetitions, bench_seed);
      out << "grid " << dims_str(cfg.grid.rows, cfg.grid.cols) << " -> " << dims_str(t.rows, t.cols)
          << " repetitions=" << repetitions << '\n';
      out << std::left << std::setw(24) << "operation" << std::right << std::setw(12) << "median_ms"
          << std::setw(12) << "p95_ms" << std::setw(8) << "calls" << '\n';
      out << std::fixed << std::setprecision(4);
      for (const auto& r : rows) {
        out << std::left << std::setw(24) << r.operation << std::right << std::setw(12) << r.median_ms
            << std::setw(12) << r.p95_ms << std::setw(8) << r.calls_per_sample << '\n';
      }
      return kOk;
    }

    if (mag_cmd->parsed()) {
      const RunConfig cfg = mag_cfg.resolve();
      if (cell == 0) throw ValidationError("--cell must be positive");
      const Warp w = make_warp(mag_sal.resolve(cfg.grid), cfg.zoom());
      const TileMap m = magnification_map(w.grid);
      const auto st = magnification_stats(m);
      out << std::setprecision(6) << "tiles " << dims_str(m.tiles.rows, m.tiles.cols) << " center=" << st.center
          << " corners=" << st.corners[0] << ',' << st.corners[1] << ',' << st.corners[2] << ','
          << st.corners[3] << " min=" << st.min << " max=" << st.max << '\n';
      out << std::setprecision(12) << "inverse_area_sum=" << st.inverse_area_sum << '\n';
      if (!heat_out.empty()) {
        Image heat(m.tiles.rows * cell, m.tiles.cols * cell, 3);
        for (std::size_t r = 0; r < heat.height(); ++r)
          for (std::size_t c = 0; c < heat.width(); ++c) heatmap_color(m.at(r / cell, c / cell), heat.pixel(r, c).data());
        png::write_image(heat_out, heat);
      }
      return kOk;
    }
  } catch (const FoldoverError& e) {
    return report(err, error_kind(e), e.what(), kStructure);
  } catch (const InjectivityError& e) {
    return report(err, error_kind(e), e.what(), kStructure);
  } catch (const Error& e) {
    return report(err, error_kind(e), e.what(), kValidation);
  } catch (const std::exception& e) {
    return report(err, "InternalError", e.what(), kCheckFailed);
  }
  return kValidation;
}

}  // namespace lzu::cli
