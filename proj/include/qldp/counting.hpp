// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file counting.hpp
 * @brief Particle-number statistics in a bounded interval [0, L] from the
 *        spectrum of the discretized counting operator chi D chi.
 *
 * With kappa_i the eigenvalues of K_ij = h d(x_i - x_j) and zt = e^{beta lambda} - 1,
 *
 *   <e^{beta lambda N}> = prod_i (1 + zt kappa_i)^{-sigma},
 *
 * so N is a sum of independent Bernoulli(kappa_i) variables for fermions and
 * of independent geometric variables with mean |kappa_i| for bosons.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/io.hpp"
#include "qldp/kernel.hpp"
#include "qldp/thermo.hpp"

namespace qldp {

class CountingMatrix {
 public:
  /// Spectral tolerance relative to ||K||.
  static constexpr double kSpectralTol = 1e-8;

  CountingMatrix(std::shared_ptr<const KernelTable> kernel, double L, double h);

  const KernelTable& kernel() const { return *kernel_; }
  std::shared_ptr<const KernelTable> kernel_ptr() const { return kernel_; }
  Statistics stats() const { return state_.stats; }
  const ThermoState& state() const { return state_; }
  double length() const noexcept { return L_; }
  double volume() const noexcept { return L_; }
  double spacing() const noexcept { return h_; }
  std::size_t size() const noexcept { return n_; }
  const Eigen::MatrixXd& matrix() const { return K_; }

  /// Eigenvalues in ascending order, clamped into the allowed interval.
  const std::vector<double>& eigenvalues() const { return kappa_; }
  const std::vector<double>& raw_eigenvalues() const { return raw_; }
  double norm() const noexcept { return norm_; }  ///< max |kappa|
  double spectral_tolerance() const noexcept { return kSpectralTol * norm_; }
  std::size_t clamped() const noexcept { return clamped_; }
  /// Allowed spectral interval [lo, hi] for the statistics and fugacity.
  double allowed_lo() const noexcept { return allowed_lo_; }
  double allowed_hi() const noexcept { return allowed_hi_; }
  /// Largest distance of a raw eigenvalue outside the allowed interval.
  double max_violation() const noexcept { return violation_; }

 private:
  std::shared_ptr<const KernelTable> kernel_;
  ThermoState state_;
  double L_, h_;
  std::size_t n_;
  Eigen::MatrixXd K_;
  std::vector<double> raw_, kappa_;
  double norm_ = 0.0, allowed_lo_ = 0.0, allowed_hi_ = 0.0, violation_ = 0.0;
  std::size_t clamped_ = 0;
};

inline CountingMatrix::CountingMatrix(std::shared_ptr<const KernelTable> kernel, double L, double h)
    : kernel_(std::move(kernel)), L_(L), h_(h) {
  if (!kernel_) throw DomainError("counting matrix needs a kernel");
  const KernelTable& t = *kernel_;
  if (t.dim != 1) throw DomainError("counting matrices are built for d = 1 intervals");
  if (!t.state) throw DomainError("counting matrix needs a thermodynamic kernel, not a bare symbol");
  state_ = *t.state;
  if (!(h > 0.0) || !(L >= h)) throw DomainError("counting matrix needs 0 < h <= L");
  const double cells = L / h;
  if (std::abs(cells - std::round(cells)) > 1e-9 * cells) throw DomainError("h must divide L");
  const double stride_d = h / t.h;
  if (std::abs(stride_d - std::round(stride_d)) > 1e-9 * stride_d)
    throw DomainError("matrix spacing h must be an integer multiple of the kernel spacing");
  n_ = static_cast<std::size_t>(std::llround(cells));
  const auto stride = static_cast<long>(std::llround(stride_d));
  if (static_cast<long>(n_ - 1) * stride > static_cast<long>(t.half_points))
    throw DomainError("kernel extent is shorter than the interval length; rebuild the kernel with X >= L");

  // Midpoint nodes x_i = (i + 1/2) h; K depends on i - j only.
  std::vector<double> row(n_);
  for (std::size_t k = 0; k < n_; ++k) row[k] = h * t.at_offset(static_cast<long>(k) * stride);
  K_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[i > j ? i - j : j - i];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DiscretizationError("eigensolver failed on the counting matrix");
  raw_.assign(es.eigenvalues().data(), es.eigenvalues().data() + n_);
  std::sort(raw_.begin(), raw_.end());
  for (double v : raw_) norm_ = std::max(norm_, std::abs(v));

  const double z = state_.fugacity();
  if (state_.stats == Statistics::Fermi) {
    allowed_lo_ = 0.0;
    allowed_hi_ = 1.0 / (1.0 + 1.0 / z);
  } else {
    allowed_lo_ = 1.0 / (1.0 - 1.0 / z);
    allowed_hi_ = 0.0;
  }
  const double tol = spectral_tolerance();
  kappa_ = raw_;
  for (double& v : kappa_) {
    const double out = std::max(allowed_lo_ - v, v - allowed_hi_);
    violation_ = std::max(violation_, out);
    if (out > tol)
      throw DiscretizationError("counting spectrum leaves its allowed interval by " + short_number(out) +
                                " (> 1e-8 ||K||); use a smaller h");
    if (out > 0.0) {
      v = std::clamp(v, allowed_lo_, allowed_hi_);
      ++clamped_;
    }
  }
}

inline CountingMatrix build_counting_matrix(std::shared_ptr<const KernelTable> kernel, double L, double h) {
  return CountingMatrix(std::move(kernel), L, h);
}

inline CountingMatrix build_counting_matrix(const KernelTable& kernel, double L, double h) {
  return CountingMatrix(std::make_shared<const KernelTable>(kernel), L, h);
}

/// log <zeta^N> = -sigma sum_i log(1 + (zeta - 1) kappa_i); +inf where the
/// boson moment generating function diverges.
inline Extended log_pgf(const CountingMatrix& M, double zeta) {
  if (!(zeta > 0.0)) throw DomainError("log_pgf needs zeta > 0");
  const double zt = zeta - 1.0;
  double s = 0.0;
  for (double k : M.eigenvalues()) {
    const double arg = zt * k;
    if (!(arg > -1.0)) return Extended::plus_infinity();
    s += std::log1p(arg);
  }
  return Extended::finite(-M.state().sigma() * s);
}

/// phi(lambda) = |Lambda|^{-1} log <e^{beta lambda N}>.
inline Extended log_generating_function(const CountingMatrix& M, double lambda) {
  const double beta = M.state().beta;
  const double zt = std::expm1(beta * lambda);
  double s = 0.0;
  for (double k : M.eigenvalues()) {
    const double arg = zt * k;
    if (!(arg > -1.0)) return Extended::plus_infinity();
    s += std::log1p(arg);
  }
  return Extended::finite(-M.state().sigma() * s / M.volume());
}

struct LambdaMax {
  Extended value;
  bool degenerate = false;  ///< BE with no negative eigenvalue (tiny interval)
};

/// Supremum of tilts with finite <e^{beta lambda N}>.
inline LambdaMax lambda_max(const CountingMatrix& M) {
  if (M.stats() == Statistics::Fermi) return {Extended::plus_infinity(), false};
  const double kmin = M.eigenvalues().front();
  if (!(kmin < 0.0)) return {Extended::plus_infinity(), true};
  return {Extended::finite(std::log1p(-1.0 / kmin) / M.state().beta), false};
}

struct TraceMoment {
  int order = 0;
  double value = 0.0;   ///< |Lambda|^{-1} tr K^m
  double target = 0.0;  ///< (2pi)^{-d} \int dhat^m
  double gap = 0.0;     ///< relative
};

inline std::vector<TraceMoment> trace_moments(const CountingMatrix& M, int m_max) {
  if (m_max < 1 || m_max > 8) throw DomainError("trace moments are supported for 1 <= m <= 8");
  std::vector<TraceMoment> out;
  for (int m = 1; m <= m_max; ++m) {
    double s = 0.0;
    for (double k : M.raw_eigenvalues()) s += std::pow(k, m);
    TraceMoment tm{m, s / M.volume(), symbol_moment(M.kernel(), m)};
    tm.gap = std::abs(tm.value - tm.target) / std::abs(tm.target);
    out.push_back(tm);
  }
  return out;
}

struct CountingDistribution {
  Statistics stats = Statistics::Fermi;
  double beta = 1.0;
  double volume = 1.0;
  std::vector<double> pmf;  ///< P(N = n), n = 0..pmf.size()-1
  double tail_mass = 0.0;   ///< probability beyond the stored support (BE truncation)
  double mean = 0.0;
  double variance = 0.0;
  double cumulants[4] = {0, 0, 0, 0};  ///< kappa_1..kappa_4 of N
};

namespace detail {

/// Cumulants of Bernoulli(p).
inline void bernoulli_cumulants(double p, double* c) {
  const double v = p * (1.0 - p);
  c[0] += p;
  c[1] += v;
  c[2] += v * (1.0 - 2.0 * p);
  c[3] += v * (1.0 - 6.0 * v);
}

/// Cumulants of the geometric law on {0,1,...} with mean m.
inline void geometric_cumulants(double m, double* c) {
  const double v = m * (1.0 + m);
  c[0] += m;
  c[1] += v;
  c[2] += v * (1.0 + 2.0 * m);
  c[3] += v * (1.0 + 6.0 * m + 6.0 * m * m);
}

/// Exact law of a sum of independent Bernoulli variables.
inline std::vector<double> bernoulli_sum_pmf(std::span<const double> p) {
  std::vector<double> pmf{1.0};
  pmf.reserve(p.size() + 1);
  for (double q : p) {
    pmf.push_back(0.0);
    for (std::size_t n = pmf.size() - 1; n > 0; --n) pmf[n] = (1.0 - q) * pmf[n] + q * pmf[n - 1];
    pmf[0] *= 1.0 - q;
  }
  return pmf;
}

/// Law of a sum of independent geometric variables P(n) = (1-q) q^n, exact on
/// {0..n_max}; each convolution is the recurrence new[n] = (1-q) old[n] + q new[n-1].
inline std::vector<double> geometric_sum_pmf(std::span<const double> q, std::size_t n_max) {
  std::vector<double> pmf(n_max + 1, 0.0);
  pmf[0] = 1.0;
  for (double r : q) {
    if (r == 0.0) continue;
    pmf[0] *= 1.0 - r;
    for (std::size_t n = 1; n <= n_max; ++n) pmf[n] = (1.0 - r) * pmf[n] + r * pmf[n - 1];
  }
  return pmf;
}

/// Geometric convolution with the support grown until the lost mass is below `tail_tol`.
inline std::vector<double> geometric_sum_pmf_adaptive(std::span<const double> q, double mean, double variance,
                                                      double tail_tol, double& tail, std::size_t cap = 50'000'000) {
  auto n_max = static_cast<std::size_t>(mean + 30.0 * std::sqrt(variance) + 64.0);
  for (;;) {
    std::vector<double> pmf = geometric_sum_pmf(q, n_max);
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    tail = std::max(0.0, 1.0 - total);
    if (tail < tail_tol) {
      // Trim trailing entries that carry nothing.
      while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
      return pmf;
    }
    if (n_max >= cap) throw ResourceError("geometric convolution support exceeds its cap");
    n_max = std::min(cap, 2 * n_max);
  }
}

}  // namespace detail

/// Exact law of N from the spectrum.
inline CountingDistribution counting_pmf(const CountingMatrix& M) {
  CountingDistribution out;
  out.stats = M.stats();
  out.beta = M.state().beta;
  out.volume = M.volume();
  const auto& kappa = M.eigenvalues();
  if (M.stats() == Statistics::Fermi) {
    for (double p : kappa) detail::bernoulli_cumulants(p, out.cumulants);
    out.pmf = detail::bernoulli_sum_pmf(kappa);
  } else {
    std::vector<double> q;
    q.reserve(kappa.size());
    for (double k : kappa) {
      const double m = -k;
      detail::geometric_cumulants(m, out.cumulants);
      q.push_back(m / (1.0 + m));
    }
    out.pmf = detail::geometric_sum_pmf_adaptive(q, out.cumulants[0], out.cumulants[1], 1e-14, out.tail_mass);
  }
  out.mean = out.cumulants[0];
  out.variance = out.cumulants[1];
  return out;
}

/// sum_n pmf(n) zeta^n from the stored law.
inline double pmf_generating_function(const CountingDistribution& dist, double zeta) {
  double s = 0.0;
  for (std::size_t n = dist.pmf.size(); n-- > 0;) s = s * zeta + dist.pmf[n];
  return s;
}

/// (beta |Lambda|)^{-1} log P(N in |Lambda| [a, b]).
inline Extended ldp_log_prob(const CountingDistribution& dist, double a, double b) {
  if (!(a <= b)) throw DomainError("ldp_log_prob needs a <= b");
  const double lo = std::ceil(a * dist.volume - 1e-9);
  const double hi = std::floor(b * dist.volume + 1e-9);
  const double top = static_cast<double>(dist.pmf.size()) - 1.0;
  if (hi < 0.0 || lo > hi || lo > top) return Extended::minus_infinity();
  const auto n0 = static_cast<std::size_t>(std::max(lo, 0.0));
  const auto n1 = static_cast<std::size_t>(std::min(hi, top));
  double p = 0.0;
  for (std::size_t n = n0; n <= n1; ++n) p += dist.pmf[n];
  if (!(p > 0.0)) return Extended::minus_infinity();
  return Extended::finite(std::log(p) / (dist.beta * dist.volume));
}

struct ChebyshevBound {
  double value = std::numeric_limits<double>::infinity();
  double lambda = 0.0;  ///< tilt realizing the bound
};

/// Exponential Chebyshev bound on (beta|Lambda|)^{-1} log P(N in |Lambda|[a,b]):
///   min over lambda >= 0 of phi(lambda)/beta - lambda a  and
///   min over lambda <= 0 of phi(lambda)/beta - lambda b.
inline ChebyshevBound chebyshev_bound(const CountingMatrix& M, double a, double b, std::span<const double> lambdas) {
  if (!(a <= b)) throw DomainError("chebyshev_bound needs a <= b");
  const double beta = M.state().beta;
  ChebyshevBound best;
  for (double l : lambdas) {
    const Extended phi = log_generating_function(M, l);
    if (!phi.is_finite()) continue;
    const double edge = l >= 0.0 ? a : b;
    const double v = phi.value() / beta - l * edge;
    if (v < best.value) best = {v, l};
  }
  return best;
}

/// Uniform tilt grid on [lo, hi] with `points` nodes (always containing 0 when spanned).
inline std::vector<double> lambda_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  if (lo < 0.0 && hi > 0.0) g.push_back(0.0);
  std::sort(g.begin(), g.end());
  return g;
}

struct CltCumulants {
  double c[4] = {0, 0, 0, 0};  ///< C(k) = kappa_k(N) / |Lambda|^{k/2}
  double variance_target = 0.0;  ///< beta^{-1} d rho / d mu
};

inline CltCumulants cumulants_clt(const CountingDistribution& dist, const KernelTable& kernel) {
  if (!kernel.state || !kernel.disp) throw DomainError("cumulants_clt needs a thermodynamic kernel");
  CltCumulants out;
  out.c[0] = 0.0;
  for (int k = 2; k <= 4; ++k) out.c[k - 1] = dist.cumulants[k - 1] / std::pow(dist.volume, 0.5 * k);
  out.variance_target = density_slope(*kernel.state, *kernel.disp) / kernel.state->beta;
  return out;
}

inline CltCumulants cumulants_clt(const CountingMatrix& M) { return cumulants_clt(counting_pmf(M), M.kernel()); }

struct TiltedMoments {
  double mean_density = 0.0;     ///< <N>_lambda / |Lambda|
  double scaled_variance = 0.0;  ///< beta Var_lambda(N) / |Lambda|
};

/// Moments of N under the law reweighted by e^{beta lambda N}.
inline TiltedMoments tilted_moments(const CountingMatrix& M, double lambda) {
  const double beta = M.state().beta;
  const double zeta = std::exp(beta * lambda), zt = std::expm1(beta * lambda);
  double mean = 0.0, var = 0.0;
  if (M.stats() == Statistics::Fermi) {
    for (double k : M.eigenvalues()) {
      const double p = zeta * k / (1.0 + zt * k);
      mean += p;
      var += p * (1.0 - p);
    }
  } else {
    const LambdaMax lm = lambda_max(M);
    if (lm.value.is_finite() && !(lambda < lm.value.value()))
      throw DomainError("tilt lambda must stay below lambda_max");
    for (double k : M.eigenvalues()) {
      const double m = -k;
      const double q = zeta * m / (1.0 + m);
      const double mt = q / (1.0 - q);
      mean += mt;
      var += mt * (1.0 + mt);
    }
  }
  return {mean / M.volume(), beta * var / M.volume()};
}

/// CSV of the spectrum: index, kappa (clamped), raw kappa.
inline std::string spectrum_csv(const CountingMatrix& M) {
  std::string out = "# counting spectrum: L=" + io::num(M.length()) + " h=" + io::num(M.spacing()) +
                    " statistics=" + std::string(to_string(M.stats())) + "\n# columns: i, kappa, raw_kappa\ni,kappa,raw_kappa\n";
  for (std::size_t i = 0; i < M.size(); ++i)
    out += std::to_string(i) + "," + io::num(M.eigenvalues()[i]) + "," + io::num(M.raw_eigenvalues()[i]) + "\n";
  return out;
}

/// CSV of a counting law: n, pmf.
inline std::string pmf_csv(const CountingDistribution& d) {
  std::string out = "# counting distribution: volume=" + io::num(d.volume) + " mean=" + io::num(d.mean) +
                    " variance=" + io::num(d.variance) + " tail_mass=" + io::num(d.tail_mass) + "\nn,pmf\n";
  for (std::size_t n = 0; n < d.pmf.size(); ++n) out += std::to_string(n) + "," + io::num(d.pmf[n]) + "\n";
  return out;
}

}  // namespace qldp
