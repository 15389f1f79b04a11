// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file kernel.hpp
 * @brief Momentum symbols of the one-body density operators and their
 *        position-space kernels.
 *
 *   FD:  dhat(k) = 1 / (1 + e^{beta(eps - mu)})   in (0, 1/(1+1/z)]
 *   BE:  dhat(k) = 1 / (1 - e^{beta(eps - mu)})   in [1/(1-1/z), 0)
 *
 * d(x) = (2pi)^{-d} \int dhat(k) e^{ikx} dk. In one dimension the transform is
 * a type-I DCT of dhat on the dual grid k_j = j pi / X; for d > 1 the kernel
 * is isotropic and is computed radially,
 *
 *   d(r) = (2pi)^{-d/2} r^{1-d/2} \int_0^inf dhat(k) k^{d/2} J_{d/2-1}(kr) dk.
 */

#pragma once

#include <fftw3.h>

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/io.hpp"
#include "qldp/quadrature.hpp"
#include "qldp/thermo.hpp"

namespace qldp {

/// dhat_sigma(k).
inline double symbol(double k, const ThermoState& state, const DispersionRelation& disp) {
  if (state.stats == Statistics::Bose && !(state.mu < 0.0))
    throw DomainError("Bose symbol needs mu < 0");
  const double x = state.beta * (disp(k) - state.mu);
  if (state.stats == Statistics::Fermi) {
    if (x > 0.0) {
      const double e = std::exp(-x);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
  }
  return -1.0 / std::expm1(x);
}

struct KernelOptions {
  /// Throw AccuracyError when |d| at the extent boundary exceeds
  /// boundary_tol * sup|d|; otherwise only flag the table.
  bool require_boundary_decay = true;
  double boundary_tol = 1e-12;
  /// Also build at 2X and compare L1 norms (near-condensation diagnostics).
  bool check_extent_doubling = false;
  double doubling_tol = 1e-4;
};

struct KernelTable {
  std::optional<ThermoState> state;       ///< empty for custom test symbols
  std::optional<DispersionRelation> disp;
  int dim = 1;
  double h = 0.0;       ///< grid spacing
  double extent = 0.0;  ///< X
  std::size_t half_points = 0;  ///< M = X / h
  /// d = 1: values[i] = d((i - M) h), i = 0..2M.  d > 1: values[i] = d(i h), i = 0..M.
  std::vector<double> values;
  std::function<double(double)> symbol;
  std::vector<double> k_breaks;  ///< radial breakpoints resolving the symbol
  double l1_norm = 0.0;
  double sup_norm = 0.0;
  double boundary_ratio = 0.0;   ///< max |d| over the outer 5% of the extent / sup
  bool extent_sufficient = true;
  std::vector<std::string> warnings;

  bool radial() const noexcept { return dim > 1; }

  /// d at x = n h (d = 1) or at r = |n| h (radial).
  double at_offset(long n) const {
    const auto m = static_cast<long>(half_points);
    if (n < -m || n > m) throw DomainError("kernel offset outside the table extent");
    if (radial()) return values[static_cast<std::size_t>(std::labs(n))];
    return values[static_cast<std::size_t>(n + m)];
  }
  double origin() const { return at_offset(0); }

  /// Sample positions matching `values`.
  std::vector<double> positions() const {
    std::vector<double> x(values.size());
    const double shift = radial() ? 0.0 : static_cast<double>(half_points);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (static_cast<double>(i) - shift) * h;
    return x;
  }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  double* p;
  explicit FftwBuffer(std::size_t n) : p(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
    if (!p) throw ResourceError("fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

/// Y_n = X_0 + (-1)^n X_M + 2 sum_{j=1}^{M-1} X_j cos(pi j n / M), n = 0..M.
inline std::vector<double> dct1(const std::vector<double>& in) {
  const std::size_t n = in.size();
  FftwBuffer a(n), b(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_r2r_1d(static_cast<int>(n), a.p, b.p, FFTW_REDFT00, FFTW_ESTIMATE);
  }
  if (!plan) throw ResourceError("FFTW could not create a DCT-I plan");
  std::copy(in.begin(), in.end(), a.p);
  fftw_execute(plan);
  std::vector<double> out(b.p, b.p + n);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

inline double radial_prefactor(int d, double r) {
  return std::pow(constants::two_pi, -0.5 * d) * std::pow(r, 1.0 - 0.5 * d);
}

/// One radial sample of the inverse transform.
inline double radial_sample(const std::function<double(double)>& sym, int d, double r,
                            const std::vector<double>& breaks) {
  if (r == 0.0) {
    auto f = [&](double k) { return std::pow(k, d - 1) * sym(k); };
    return surface_over_2pi_d(d) * quad::half_line(f, breaks, 1e-13).value;
  }
  const double nu = 0.5 * d - 1.0;
  const double span = constants::pi / r;
  if (d == 3) {
    // J_{1/2}(z) = sqrt(2 / (pi z)) sin z.
    auto f = [&](double k) { return k * std::sin(k * r) * sym(k); };
    return quad::half_line(f, breaks, 1e-13, false, span, 1u << 16).value / (2.0 * constants::pi * constants::pi * r);
  }
  auto f = [&](double k) { return std::pow(k, 0.5 * d) * boost::math::cyl_bessel_j(nu, k * r) * sym(k); };
  return radial_prefactor(d, r) * quad::half_line(f, breaks, 1e-13, false, span, 1u << 16).value;
}

inline void check_grid(double h, double X) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("kernel grid spacing h must be positive");
  if (!(X >= h) || !std::isfinite(X)) throw DomainError("kernel extent X must be at least h");
  const double m = X / h;
  if (std::abs(m - std::round(m)) > 1e-9 * m) throw DomainError("kernel extent X must be an integer multiple of h");
}

inline void finish_norms(KernelTable& t, const KernelOptions& opt) {
  t.sup_norm = 0.0;
  for (double v : t.values) t.sup_norm = std::max(t.sup_norm, std::abs(v));
  const std::size_t n = t.values.size();
  if (!t.radial()) {
    double s = 0.0;
    for (double v : t.values) s += std::abs(v);
    t.l1_norm = t.h * s;
  } else {
    // S_d \int r^{d-1} |d(r)| dr by the trapezoid rule.
    const double sd = detail::surface_over_2pi_d(t.dim) * std::pow(constants::two_pi, t.dim);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = static_cast<double>(i) * t.h;
      const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
      s += w * std::pow(r, t.dim - 1) * std::abs(t.values[i]);
    }
    t.l1_norm = sd * t.h * s;
  }
  // Outer 5% of the extent, on the positive side.
  const std::size_t m = t.half_points;
  const std::size_t first = m - std::min(m, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(m))));
  double edge = 0.0;
  for (std::size_t i = first; i <= m; ++i) edge = std::max(edge, std::abs(t.at_offset(static_cast<long>(i))));
  t.boundary_ratio = t.sup_norm > 0.0 ? edge / t.sup_norm : 0.0;
  t.extent_sufficient = t.boundary_ratio <= opt.boundary_tol;
  if (!t.extent_sufficient) {
    const std::string msg = "kernel has not decayed at the extent boundary (|d|/sup = " +
                            short_number(t.boundary_ratio) + "); increase X";
    if (opt.require_boundary_decay) throw AccuracyError(msg, t.boundary_ratio);
    t.warnings.push_back(msg);
  }
}

}  // namespace detail

/// Kernel of an arbitrary real, even, integrable symbol. `k_breaks` are
/// radial breakpoints at the symbol's natural scales (used for d > 1 and for
/// symbol moments).
inline KernelTable build_kernel(int dim, std::function<double(double)> sym, std::vector<double> k_breaks,
                                double h, double X, const KernelOptions& opt = {}) {
  if (dim < 1) throw DomainError("kernel dimension must be positive");
  detail::check_grid(h, X);
  KernelTable t;
  t.dim = dim;
  t.h = h;
  t.half_points = static_cast<std::size_t>(std::llround(X / h));
  t.extent = static_cast<double>(t.half_points) * h;
  t.symbol = std::move(sym);
  t.k_breaks = std::move(k_breaks);
  const std::size_t m = t.half_points;

  if (dim == 1) {
    const double dk = constants::pi / t.extent;
    std::vector<double> samples(m + 1);
    for (std::size_t j = 0; j <= m; ++j) samples[j] = t.symbol(static_cast<double>(j) * dk);
    const std::vector<double> y = detail::dct1(samples);
    const double scale = dk / constants::two_pi;
    t.values.assign(2 * m + 1, 0.0);
    for (std::size_t n = 0; n <= m; ++n) {
      t.values[m + n] = scale * y[n];
      t.values[m - n] = scale * y[n];
    }
  } else {
    t.values.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
      t.values[i] = detail::radial_sample(t.symbol, dim, static_cast<double>(i) * h, t.k_breaks);
  }
  detail::finish_norms(t, opt);
  return t;
}

/// Default extent: 40 thermal lengths 1/k_T, rounded up to a multiple of h.
inline double default_extent(double beta, const DispersionRelation& disp, double h) {
  const double x = 40.0 / thermal_wavevector(beta, disp);
  return std::ceil(x / h) * h;
}

/// Kernel of the FD/BE one-body density operator at `state`.
inline KernelTable build_kernel(const ThermoState& state, const DispersionRelation& disp, double h, double X,
                                const KernelOptions& opt = {}) {
  state.validate();
  auto sym = [state, disp](double k) { return symbol(k, state, disp); };
  KernelTable t = build_kernel(disp.dimension(), sym, detail::thermal_breaks(state.beta, state.mu, disp), h, X, opt);
  t.state = state;
  t.disp = disp;
  if (opt.check_extent_doubling) {
    KernelOptions relaxed = opt;
    relaxed.check_extent_doubling = false;
    relaxed.require_boundary_decay = false;
    const KernelTable wide = build_kernel(disp.dimension(), sym, t.k_breaks, h, 2.0 * t.extent, relaxed);
    const double change = std::abs(wide.l1_norm - t.l1_norm) / wide.l1_norm;
    if (!(change < opt.doubling_tol))
      t.warnings.push_back("L1 norm changes by " + short_number(change) +
                           " under extent doubling; kernel integrability is marginal near condensation");
  }
  return t;
}

/// (2pi)^{-d} \int dhat(k)^m d^dk by radial quadrature.
inline double symbol_moment(const KernelTable& t, int m, double tol = 1e-12) {
  if (m < 1) throw DomainError("symbol moment order must be >= 1");
  const int d = t.dim;
  auto f = [&](double k) { return std::pow(k, d - 1) * std::pow(t.symbol(k), m); };
  return detail::surface_over_2pi_d(d) * quad::half_line(f, t.k_breaks, tol).value;
}

/// Right side of Parseval's identity, (2pi)^{-d} \int dhat^2.
inline double parseval_target(const KernelTable& t) { return symbol_moment(t, 2); }

/// Left side: h^d sum_x d(x)^2 (radial tables use the trapezoid rule in r).
inline double parseval_sum(const KernelTable& t) {
  if (!t.radial()) {
    double s = 0.0;
    for (double v : t.values) s += v * v;
    return t.h * s;
  }
  const double sd = detail::surface_over_2pi_d(t.dim) * std::pow(constants::two_pi, t.dim);
  double s = 0.0;
  const std::size_t n = t.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) * t.h;
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    s += w * std::pow(r, t.dim - 1) * t.values[i] * t.values[i];
  }
  return sd * t.h * s;
}

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool local_maxima = false;  ///< envelope from local maxima (else log-binned maxima)
  std::vector<double> x, envelope;
};

/// Power-law slope of the envelope of |d| against |x| over [x_lo, x_hi].
/// Points with |d| <= 1e-14 sup|d| are dropped. The envelope is made of the
/// local maxima of |d| when there are at least five of them, and of per-bin
/// maxima over 16 logarithmic bins otherwise (monotone kernels have none).
inline DecayFit decay_exponent(const KernelTable& t, double x_lo, double x_hi) {
  if (!(x_lo > 0.0 && x_hi > x_lo)) throw DomainError("decay window needs 0 < x_lo < x_hi");
  if (x_hi > t.extent + 1e-12 * t.extent) throw DomainError("decay window exceeds the kernel extent");
  const double floor = 1e-14 * t.sup_norm;
  const auto m = static_cast<long>(t.half_points);
  const long i_lo = static_cast<long>(std::ceil(x_lo / t.h - 1e-9));
  const long i_hi = std::min(m, static_cast<long>(std::floor(x_hi / t.h + 1e-9)));

  std::vector<double> xs, ys;
  for (long i = std::max(i_lo, 1L); i <= i_hi; ++i) {
    const double v = std::abs(t.at_offset(i));
    if (v <= floor) continue;
    const double prev = std::abs(t.at_offset(i - 1));
    const double next = i < m ? std::abs(t.at_offset(i + 1)) : 0.0;
    if (v > prev && v >= next) {
      xs.push_back(static_cast<double>(i) * t.h);
      ys.push_back(v);
    }
  }
  DecayFit fit;
  fit.local_maxima = xs.size() >= 5;
  if (!fit.local_maxima) {
    xs.clear();
    ys.clear();
    constexpr int bins = 16;
    const double ratio = std::log(x_hi / x_lo) / bins;
    for (int b = 0; b < bins; ++b) {
      const double lo = x_lo * std::exp(ratio * b), hi = x_lo * std::exp(ratio * (b + 1));
      double best = 0.0, at = 0.0;
      for (long i = std::max(i_lo, 1L); i <= i_hi; ++i) {
        const double x = static_cast<double>(i) * t.h;
        if (x < lo || (b + 1 < bins ? x >= hi : x > hi)) continue;
        const double v = std::abs(t.at_offset(i));
        if (v > floor && v > best) {
          best = v;
          at = x;
        }
      }
      if (best > 0.0) {
        xs.push_back(at);
        ys.push_back(best);
      }
    }
  }
  if (xs.size() < 5) throw AccuracyError("fewer than 5 envelope points in the decay window", static_cast<double>(xs.size()));

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.x = std::move(xs);
  fit.envelope = std::move(ys);
  return fit;
}

/// CSV with columns x, d(x) (r, d(r) for radial tables).
inline std::string kernel_csv(const KernelTable& t) {
  std::string out = "# kernel table: dim=" + std::to_string(t.dim) + " h=" + io::num(t.h) +
                    " X=" + io::num(t.extent) + " l1_norm=" + io::num(t.l1_norm) +
                    " sup_norm=" + io::num(t.sup_norm) + "\n";
  out += t.radial() ? "r,d\n" : "x,d\n";
  const std::vector<double> x = t.positions();
  for (std::size_t i = 0; i < x.size(); ++i) out += io::num(x[i]) + "," + io::num(t.values[i]) + "\n";
  return out;
}

inline void write_kernel_csv(const KernelTable& t, const std::filesystem::path& path) {
  io::atomic_write(path, kernel_csv(t));
}

}  // namespace qldp
