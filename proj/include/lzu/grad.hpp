// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Analytic Jacobian of separable warp samples with respect to the 1D
//! saliency, and a central-difference checker.

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/zoom.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace lzu {

/// Dense rows x cols matrix of dT_k / dS_m, row-major.
struct WarpJacobian {
  std::size_t rows = 0;  // output samples
  std::size_t cols = 0;  // saliency samples
  std::vector<double> values;

  double at(std::size_t k, std::size_t m) const { return values[k * cols + m]; }
  double& at(std::size_t k, std::size_t m) { return values[k * cols + m]; }
};

/// Jacobian of axis_warp(saliency, k, n_out, anti_cropping) with respect to
/// the saliency samples.
///
/// Raw warp: dT_k/dS_m = sum over the taps j that read S_m of
/// k(x_k, x_j) (x_j - T_k) / D_k, with D_k the kernel mass. Reflected taps
/// alias the same saliency sample, so they accumulate into one column. The
/// anti-cropping renormalization T' = (T - T_0) / (T_last - T_0) is then
/// applied by the chain rule.
inline WarpJacobian warp_jacobian_separable(std::span<const double> saliency,
                                            const AttractionKernel& k, std::size_t n_out,
                                            bool anti_cropping) {
  k.validate();
  const std::size_t n = saliency.size();
  if (n < 2 || n_out < 2) throw InvalidArgument("axis warp needs at least 2 samples");
  const auto taps = detail::axis_taps(n_out, n, k, anti_cropping);

  WarpJacobian jac{n_out, n, std::vector<double>(n_out * n, 0.0)};
  std::vector<double> raw(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const auto& t = taps[i];
    double num = 0.0, den = 0.0;
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
    const double ti = num / den;
    raw[i] = ti;
    for (std::size_t q = 0; q < t.weights.size(); ++q) {
      const long long j = t.first + static_cast<long long>(q);
      jac.at(i, detail::reflect_index(j, n)) +=
          t.weights[q] * (detail::sample_position(j, n) - ti) / den;
    }
  }

  if (anti_cropping) {
    const double t0 = raw.front(), t1 = raw.back();
    const double span = t1 - t0;
    if (!(span > 0.0)) throw FoldoverError("warp collapsed an axis to a single value");
    const std::vector<double> j0(jac.values.begin(), jac.values.begin() + static_cast<long>(n));
    const std::vector<double> j1(jac.values.end() - static_cast<long>(n), jac.values.end());
    for (std::size_t i = 0; i < n_out; ++i) {
      const double tn = (raw[i] - t0) / span;
      for (std::size_t m = 0; m < n; ++m) {
        jac.at(i, m) = (jac.at(i, m) - j0[m] - tn * (j1[m] - j0[m])) / span;
      }
    }
    // Endpoints are pinned to 0 and 1.
    for (std::size_t m = 0; m < n; ++m) {
      jac.at(0, m) = 0.0;
      jac.at(n_out - 1, m) = 0.0;
    }
  }
  return jac;
}

using SaliencyToSamples = std::function<std::vector<double>(std::span<const double>)>;

struct FdEntry {
  std::size_t row, col;
  double analytic, numeric;
};

struct FdReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::vector<FdEntry> failures;  // entries whose relative error exceeds the tolerance

  bool passed() const { return failures.empty(); }
};

/// Central-difference check of an analytic Jacobian:
/// fd[k, m] = (f(S + step e_m) - f(S - step e_m))[k] / (2 step).
///
/// f is evaluated in precision Real (f takes std::span<const Real> and returns
/// a vector of Real); long double keeps the rounding noise of a small step
/// well below the tolerance.
///
/// Relative error of an entry is |analytic - fd| / max(|analytic|, |fd|,
/// abs_floor); abs_floor keeps entries that are zero on both sides from
/// dividing by zero.
template <typename Real = double, typename F>
FdReport fd_check(F&& f, std::span<const double> saliency, const WarpJacobian& analytic, double step,
                  double tolerance, double abs_floor = 1e-8) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  FdReport rep;
  std::vector<Real> s(saliency.begin(), saliency.end());
  for (std::size_t m = 0; m < s.size(); ++m) {
    const Real orig = s[m];
    const Real hi = orig + static_cast<Real>(step), lo = orig - static_cast<Real>(step);
    s[m] = hi;
    const std::vector<Real> up = f(std::span<const Real>(s));
    s[m] = lo;
    const std::vector<Real> dn = f(std::span<const Real>(s));
    s[m] = orig;
    if (up.size() != analytic.rows || dn.size() != analytic.rows || analytic.cols != s.size()) {
      throw InvalidArgument("Jacobian shape does not match the evaluated function");
    }
    for (std::size_t k = 0; k < analytic.rows; ++k) {
      const double fd = static_cast<double>((up[k] - dn[k]) / (hi - lo));
      const double a = analytic.at(k, m);
      const double abs_err = std::abs(a - fd);
      const double rel = abs_err / std::max({std::abs(a), std::abs(fd), abs_floor});
      rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
      rep.max_rel_error = std::max(rep.max_rel_error, rel);
      if (rel > tolerance) rep.failures.push_back({k, m, a, fd});
    }
  }
  return rep;
}

}  // namespace lzu
