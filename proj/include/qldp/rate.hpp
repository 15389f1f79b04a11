// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file rate.hpp
 * @brief Legendre transform of the translated pressure: the minimizer
 *        lambda_0(x), the density rate function f(x) (sign convention f <= 0,
 *        f(rho_bar) = 0) and its suprema over intervals.
 *
 * f(x) = inf_lambda [ g(lambda) - lambda x ],  g(lambda) = p(mu + lambda) - p(mu).
 *
 * For bosons with finite rho_c the infimum sits at the edge lambda = -mu for
 * every x >= rho_c, which makes f affine with slope mu there.
 */

#pragma once

#include <cmath>

#include "qldp/core.hpp"
#include "qldp/roots.hpp"
#include "qldp/thermo.hpp"

namespace qldp {

struct RateContext {
  ThermoState state;
  DispersionRelation disp;
  double mean_density = 0.0;        ///< rho_bar = g'(0)
  double reference_pressure = 0.0;  ///< p(mu)
  Extended critical_density;        ///< rho_c, +inf for FD or d <= gamma
  Extended lambda_upper;            ///< +inf (FD) or -mu (BE)
  double quad_tol = 1e-12;

  static RateContext make(const ThermoState& state, const DispersionRelation& disp, double quad_tol = 1e-12) {
    state.validate();
    RateContext c{state, disp, 0.0, 0.0, Extended::plus_infinity(), Extended::plus_infinity(), quad_tol};
    c.quad_tol = quad_tol;
    c.mean_density = qldp::density(state, disp, quad_tol);
    c.reference_pressure = qldp::pressure(state, disp, quad_tol);
    c.critical_density = qldp::critical_density(state.stats, state.beta, disp, quad_tol);
    c.lambda_upper = state.stats == Statistics::Bose ? Extended::finite(-state.mu) : Extended::plus_infinity();
    if (c.critical_density.is_finite() && !(c.mean_density < c.critical_density.value()))
      throw DomainError("reference state must satisfy rho_bar < rho_c");
    return c;
  }

  /// g(lambda); callers keep lambda inside the domain.
  double g(double lambda) const {
    if (lambda == 0.0) return 0.0;
    if (state.stats == Statistics::Bose && lambda == -state.mu)
      return pressure_at_condensation(state.beta, disp, quad_tol) - reference_pressure;
    return pressure(state.shifted(lambda), disp, quad_tol) - reference_pressure;
  }

  /// g'(lambda) = rho(mu + lambda).
  double g_prime(double lambda) const {
    if (lambda == 0.0) return mean_density;
    return density(state.shifted(lambda), disp, quad_tol);
  }

  bool in_condensed_regime(double x) const {
    return critical_density.is_finite() && x >= critical_density.value();
  }
};

struct RatePoint {
  double x = 0.0;
  Extended lambda0;
  Extended f;
};

/// lambda_0(x): the unique solution of g'(lambda_0) = x for 0 < x < rho_c,
/// -inf for x <= 0 and -mu (BE) for x >= rho_c.
inline Extended minimizer(double x, const RateContext& ctx, double tol = 1e-11) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  if (!std::isfinite(x)) throw DomainError("density x must be finite");
  if (x <= 0.0) return Extended::minus_infinity();
  if (ctx.in_condensed_regime(x)) return ctx.lambda_upper;
  if (x == ctx.mean_density) return Extended::finite(0.0);

  const double beta = ctx.state.beta;
  auto residual = [&](double lambda) { return ctx.g_prime(lambda) - x; };
  const double target_tol = tol * std::max(x, ctx.mean_density);

  double lo, hi;
  if (x > ctx.mean_density) {
    lo = 0.0;
    if (ctx.state.stats == Statistics::Bose) {
      const double edge = -ctx.state.mu;
      int j = 1;
      for (hi = 0.5 * edge; residual(hi) < 0.0; hi = edge * (1.0 - std::ldexp(1.0, -j))) {
        if (++j > 60) throw AccuracyError("no root bracket below lambda = -mu", x);
        lo = hi;
      }
    } else {
      int j = 0;
      for (hi = 1.0 / beta; residual(hi) < 0.0; hi = std::ldexp(1.0 / beta, j)) {
        if (++j > 40) throw AccuracyError("no root bracket below lambda = 2^40/beta", x);
        lo = hi;
      }
    }
  } else {
    hi = 0.0;
    int j = 0;
    for (lo = -1.0 / beta; residual(lo) > 0.0; lo = -std::ldexp(1.0 / beta, j)) {
      if (++j > 40) throw AccuracyError("no root bracket above lambda = -2^40/beta", x);
      hi = lo;
    }
  }
  const roots::Root r = roots::solve_increasing(residual, lo, hi, target_tol);
  if (!(std::abs(r.residual) <= target_tol))
    throw AccuracyError("minimizer residual above tolerance", std::abs(r.residual));
  return Extended::finite(r.x);
}

/// f(x) together with the minimizer that realizes it.
inline RatePoint rate_value(double x, const RateContext& ctx, double tol = 1e-11) {
  RatePoint pt{x, minimizer(x, ctx, tol), Extended::minus_infinity()};
  if (x < 0.0) return pt;
  if (x == 0.0) {
    // Continuity: g(lambda) -> -p(mu) as lambda -> -inf while lambda x = 0.
    pt.f = Extended::finite(-ctx.reference_pressure);
    return pt;
  }
  if (ctx.in_condensed_regime(x)) {
    const double p0 = pressure_at_condensation(ctx.state.beta, ctx.disp, ctx.quad_tol);
    pt.f = Extended::finite(p0 - ctx.reference_pressure + ctx.state.mu * x);
    return pt;
  }
  const double l0 = pt.lambda0.value();
  pt.f = Extended::finite(ctx.g(l0) - l0 * x);
  return pt;
}

/// sup of f over [a, b]; f is concave with its maximum 0 at rho_bar.
inline Extended interval_rate(double a, double b, const RateContext& ctx, double tol = 1e-11) {
  if (!(a <= b)) throw DomainError("interval_rate needs a <= b");
  if (a <= ctx.mean_density && ctx.mean_density <= b) return Extended::finite(0.0);
  if (b < ctx.mean_density) return rate_value(b, ctx, tol).f;
  return rate_value(a, ctx, tol).f;
}

}  // namespace qldp
