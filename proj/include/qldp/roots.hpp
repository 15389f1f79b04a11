// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "qldp/core.hpp"

namespace qldp::roots {

struct Root {
  double x;
  double residual;
  int iterations;
};

/// Root of an increasing function on a bracket [lo, hi] with f(lo) < 0 < f(hi).
/// Secant (false-position with the Illinois correction) steps, falling back to
/// bisection whenever the secant step lands outside the central 80% of the
/// bracket. Stops once |f(x)| <= residual_tol or the bracket collapses.
template <class F>
Root solve_increasing(F&& f, double lo, double hi, double residual_tol, int max_iter = 300) {
  double flo = f(lo), fhi = f(hi);
  if (!(flo <= 0.0 && fhi >= 0.0))
    throw AccuracyError("root bracket does not change sign", std::min(std::abs(flo), std::abs(fhi)));
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};

  int side = 0;
  Root best{lo, flo, 0};
  if (std::abs(fhi) < std::abs(flo)) best = {hi, fhi, 0};
  for (int it = 1; it <= max_iter; ++it) {
    const double width = hi - lo;
    double x = hi - fhi * width / (fhi - flo);
    if (!(x > lo + 0.1 * width && x < hi - 0.1 * width)) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (std::abs(fx) < std::abs(best.residual)) best = {x, fx, it};
    if (std::abs(fx) <= residual_tol) return {x, fx, it};
    if (fx < 0.0) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == +1) flo *= 0.5;
      side = +1;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) ||
        hi - lo == 0.0) {
      best.iterations = it;
      return best;
    }
  }
  throw AccuracyError("root search did not converge", std::abs(best.residual));
}

}  // namespace qldp::roots
