// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qldp/core.hpp"

namespace qldp::quad {

struct Estimate {
  double value = 0.0;
  double error = 0.0;  ///< absolute error estimate
};

/// Boost's Kronrod error estimate carries a rounding floor of roughly
/// 50 ulp of the panel's L1 norm; asking for less only exhausts the depth.
inline constexpr double kPanelTolFloor = 5e-13;

/// Adaptive Gauss-Kronrod (G15/K31) on a single finite panel.
/// The panel is mapped onto [-1, 1] before calling Boost: the 1.74 recursion
/// compares width-scaled tolerances against unscaled leaf errors, which only
/// agree when the half-width is 1.
template <class F>
Estimate panel(F&& f, double a, double b, double rel_tol, unsigned max_depth = 14) {
  if (!(b > a)) return {};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto mapped = [&](double t) { return f(mid + half * t); };
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      mapped, -1.0, 1.0, max_depth, std::max(rel_tol, kPanelTolFloor), &err);
  return {half * v, half * err};
}

/// Integrates over consecutive panels [b_0,b_1], [b_1,b_2], ... of `breaks`,
/// splitting each panel so no sub-panel is wider than `max_width`.
template <class F>
Estimate panels(F&& f, std::span<const double> breaks, double rel_tol,
                double max_width = std::numeric_limits<double>::infinity()) {
  Estimate total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (!(b > a)) continue;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_width)));
    for (std::size_t j = 0; j < pieces; ++j) {
      const double lo = a + (b - a) * static_cast<double>(j) / static_cast<double>(pieces);
      const double hi = (j + 1 == pieces) ? b : a + (b - a) * static_cast<double>(j + 1) / static_cast<double>(pieces);
      const Estimate e = panel(f, lo, hi, rel_tol);
      total.value += e.value;
      total.error += e.error;
    }
  }
  return total;
}

/// Integrates a non-negative-tailed integrand over [0, inf) on the given
/// leading breakpoints, then keeps appending geometrically growing panels
/// until the last panel contributes less than 1e-16 of the running total.
/// `substitute_origin` maps the first panel through k = t^2, which tames
/// integrable k^{-1/2}-type or sharply peaked behaviour at the origin.
template <class F>
Estimate half_line(F&& f, std::vector<double> breaks, double rel_tol,
                   bool substitute_origin = false, double max_width = std::numeric_limits<double>::infinity(),
                   std::size_t max_panels = 4096) {
  if (breaks.empty() || breaks.front() != 0.0) breaks.insert(breaks.begin(), 0.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  if (breaks.size() < 2) breaks.push_back(1.0);

  Estimate total;
  std::size_t start = 0;
  if (substitute_origin) {
    const double edges[2] = {0.0, std::sqrt(breaks[1])};
    total = panels([&](double t) { return 2.0 * t * f(t * t); }, std::span<const double>(edges, 2), rel_tol);
    start = 1;
  }
  const Estimate body = panels(f, std::span<const double>(breaks).subspan(start), rel_tol, max_width);
  total.value += body.value;
  total.error += body.error;

  // Geometric tail panels.
  double lo = breaks.back();
  double width = std::max(lo - breaks[breaks.size() - 2], lo * 0.5);
  for (std::size_t i = 0; i < max_panels; ++i) {
    const double hi = lo + width;
    const double pts[2] = {lo, hi};
    const Estimate e = panels(f, std::span<const double>(pts, 2), rel_tol, max_width);
    total.value += e.value;
    total.error += e.error;
    const double edge = std::abs(f(hi)) * hi;
    const double scale = std::abs(total.value);
    if (std::abs(e.value) <= 1e-16 * scale && edge <= 1e-16 * scale) return total;
    if (scale == 0.0 && e.value == 0.0 && edge == 0.0) return total;
    lo = hi;
    width *= 2.0;
  }
  throw AccuracyError("half-line quadrature did not reach a negligible tail", total.error);
}

}  // namespace qldp::quad
