// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file thermo.hpp
 * @brief Isotropic dispersion relations and the grand-canonical equation of
 *        state of the ideal Bose/Fermi gas.
 *
 * Every d-dimensional momentum integral is reduced to a radial one,
 *
 *     (2 pi)^{-d} \int d^d k F(|k|) = S_d (2 pi)^{-d} \int_0^\infty k^{d-1} F(k) dk,
 *
 * with S_d = 2 pi^{d/2} / Gamma(d/2) (S_1 = 2), and evaluated by adaptive
 * Gauss-Kronrod panels placed at the energy scales of the integrand.
 * Units: hbar = 1.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/quadrature.hpp"

namespace qldp {

enum class DispersionKind { NonRelativistic, Relativistic, Massless, Table };

/// One-particle energy eps(|k|) with its dimension and growth exponents
/// (eps ~ |k|^gamma near 0, eps >~ |k|^alpha at large |k|).
class DispersionRelation {
 public:
  /// eps(k) = k^2 / (2 m).
  static DispersionRelation non_relativistic(int dim, double mass) {
    if (!(mass > 0)) throw DomainError("non-relativistic dispersion needs mass > 0");
    DispersionRelation d(DispersionKind::NonRelativistic, dim, 2.0, 2.0);
    d.mass_ = mass;
    return d;
  }

  /// eps(k) = sqrt(m^2 c^4 + k^2 c^2) - m c^2.
  static DispersionRelation relativistic(int dim, double mass, double c) {
    if (!(mass > 0) || !(c > 0)) throw DomainError("relativistic dispersion needs mass > 0 and c > 0");
    DispersionRelation d(DispersionKind::Relativistic, dim, 2.0, 1.0);
    d.mass_ = mass;
    d.speed_ = c;
    return d;
  }

  /// eps(k) = c |k|.
  static DispersionRelation massless(int dim, double c) {
    if (!(c > 0)) throw DomainError("massless dispersion needs c > 0");
    DispersionRelation d(DispersionKind::Massless, dim, 1.0, 1.0);
    d.speed_ = c;
    return d;
  }

  /// Piecewise-linear eps on the sampled |k| grid (first sample at k = 0),
  /// power-law extrapolation beyond the last sample.
  static DispersionRelation from_table(int dim, std::vector<double> k, std::vector<double> eps) {
    if (k.size() != eps.size() || k.size() < 3) throw DomainError("dispersion table needs >= 3 (k, eps) rows");
    if (k.front() != 0.0) throw DomainError("dispersion table must start at k = 0");
    for (std::size_t i = 1; i < k.size(); ++i) {
      if (!(k[i] > k[i - 1])) throw DomainError("dispersion table k column must be strictly increasing");
      if (!(eps[i] > eps[i - 1])) throw DomainError("dispersion table eps column must be strictly increasing");
    }
    if (std::abs(eps.front()) > 1e-14) throw DomainError("dispersion table must have eps(0) = 0");
    eps.front() = 0.0;
    const auto n = k.size();
    const double gamma = std::log(eps[2] / eps[1]) / std::log(k[2] / k[1]);
    const double alpha = std::log(eps[n - 1] / eps[n - 2]) / std::log(k[n - 1] / k[n - 2]);
    DispersionRelation d(DispersionKind::Table, dim, gamma, alpha);
    d.table_ = std::make_shared<const Table>(Table{std::move(k), std::move(eps)});
    return d;
  }

  /// Two whitespace-separated columns |k| eps; '#' starts a comment.
  static DispersionRelation load_table(int dim, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dispersion table '" + path.string() + "'");
    std::vector<double> k, e;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream row(line);
      double a, b;
      if (row >> a >> b) {
        k.push_back(a);
        e.push_back(b);
      }
    }
    return from_table(dim, std::move(k), std::move(e));
  }

  double operator()(double k) const {
    k = std::abs(k);
    switch (kind_) {
      case DispersionKind::NonRelativistic: return k * k / (2.0 * mass_);
      case DispersionKind::Relativistic: {
        // sqrt(m^2c^4 + k^2c^2) - mc^2 without cancellation.
        const double mc2 = mass_ * speed_ * speed_;
        const double kc = k * speed_;
        return kc * kc / (std::sqrt(mc2 * mc2 + kc * kc) + mc2);
      }
      case DispersionKind::Massless: return speed_ * k;
      case DispersionKind::Table: return table_eval(k);
    }
    return 0.0;
  }

  /// Inverse: the |k| with eps(|k|) = energy (energy >= 0).
  double momentum_at(double energy) const {
    if (energy <= 0.0) return 0.0;
    switch (kind_) {
      case DispersionKind::NonRelativistic: return std::sqrt(2.0 * mass_ * energy);
      case DispersionKind::Relativistic: {
        const double mc2 = mass_ * speed_ * speed_;
        return std::sqrt(energy * (energy + 2.0 * mc2)) / speed_;
      }
      case DispersionKind::Massless: return energy / speed_;
      case DispersionKind::Table: {
        const auto& t = *table_;
        if (energy >= t.eps.back()) return t.k.back() * std::pow(energy / t.eps.back(), 1.0 / alpha_);
        const auto it = std::upper_bound(t.eps.begin(), t.eps.end(), energy);
        const auto i = static_cast<std::size_t>(it - t.eps.begin());
        const double w = (energy - t.eps[i - 1]) / (t.eps[i] - t.eps[i - 1]);
        return t.k[i - 1] + w * (t.k[i] - t.k[i - 1]);
      }
    }
    return 0.0;
  }

  DispersionKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dim_; }
  double small_k_exponent() const noexcept { return gamma_; }
  double large_k_exponent() const noexcept { return alpha_; }
  double mass() const noexcept { return mass_; }
  double speed() const noexcept { return speed_; }

  /// Checks eps(0) = 0, eps > 0 away from 0, continuity, and |k|^alpha growth
  /// (up to a positive constant) on `samples` points of [0, k_max].
  void validate(double k_max, int samples = 2000) const {
    if (dim_ < 1) throw DomainError("dispersion dimension must be a positive integer");
    if (std::abs((*this)(0.0)) > 1e-14) throw DomainError("dispersion must satisfy eps(0) = 0");
    const double threshold = 0.25 * k_max;
    double ratio_at_threshold = -1.0, min_ratio = std::numeric_limits<double>::infinity();
    double prev = 0.0;
    const double step = k_max / samples;
    for (int i = 1; i <= samples; ++i) {
      const double k = step * i;
      const double e = (*this)(k);
      if (!(e > 0.0)) throw DomainError("dispersion must satisfy eps(k) > 0 for k != 0");
      const double slope_bound = 4.0 * std::max(e, 1.0) * std::max(alpha_, gamma_) / k;
      if (std::abs(e - prev) > slope_bound * step + 1e-12)
        throw DomainError("dispersion is discontinuous near k = " + std::to_string(k));
      prev = e;
      if (k >= threshold) {
        const double r = e / std::pow(k, alpha_);
        if (ratio_at_threshold < 0) ratio_at_threshold = r;
        min_ratio = std::min(min_ratio, r);
      }
    }
    if (!(min_ratio >= 1e-3 * ratio_at_threshold))
      throw DomainError("dispersion does not grow like |k|^alpha at large k");
  }

  std::string describe() const {
    std::ostringstream s;
    switch (kind_) {
      case DispersionKind::NonRelativistic: s << "nonrel:" << mass_; break;
      case DispersionKind::Relativistic: s << "rel:" << mass_ << ":" << speed_; break;
      case DispersionKind::Massless: s << "massless:" << speed_; break;
      case DispersionKind::Table: s << "table(" << table_->k.size() << " rows)"; break;
    }
    return s.str();
  }

 private:
  struct Table {
    std::vector<double> k, eps;
  };

  DispersionRelation(DispersionKind kind, int dim, double gamma, double alpha)
      : kind_(kind), dim_(dim), gamma_(gamma), alpha_(alpha) {
    if (dim < 1) throw DomainError("dispersion dimension must be a positive integer");
  }

  double table_eval(double k) const {
    const auto& t = *table_;
    if (k >= t.k.back()) return t.eps.back() * std::pow(k / t.k.back(), alpha_);
    const auto it = std::upper_bound(t.k.begin(), t.k.end(), k);
    const auto i = static_cast<std::size_t>(it - t.k.begin());
    const double w = (k - t.k[i - 1]) / (t.k[i] - t.k[i - 1]);
    return t.eps[i - 1] + w * (t.eps[i] - t.eps[i - 1]);
  }

  DispersionKind kind_;
  int dim_;
  double gamma_, alpha_;
  double mass_ = 0.0, speed_ = 0.0;
  std::shared_ptr<const Table> table_;
};

/// Inverse temperature, chemical potential and statistics.
struct ThermoState {
  double beta = 1.0;
  double mu = 0.0;
  Statistics stats = Statistics::Fermi;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be a positive finite number");
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    if (stats == Statistics::Bose && !(mu < 0.0)) throw DomainError("Bose gas requires mu < 0 (got mu = " + std::to_string(mu) + ")");
  }
  double sigma() const noexcept { return sign(stats); }
  double fugacity() const noexcept { return std::exp(beta * mu); }
  ThermoState shifted(double lambda) const { return {beta, mu + lambda, stats}; }
};

struct EosResult {
  double pressure = 0.0;
  double density = 0.0;
  double pressure_error = 0.0;
  double density_error = 0.0;
};

// ============================================================================
// Pointwise integrands, written in x = beta (eps - mu)
// ============================================================================
namespace detail {

/// -log(1 - e^{-x}) for x > 0, accurate at both ends.
inline double bose_log_term(double x) {
  return x > 0.6931471805599453 ? -std::log1p(-std::exp(-x)) : -std::log(-std::expm1(-x));
}

/// -sigma log(1 - sigma e^{-x})
inline double log_partition_term(double x, Statistics s) {
  if (s == Statistics::Fermi) return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
  return bose_log_term(x);
}

/// 1 / (e^x - sigma)
inline double occupation_term(double x, Statistics s) {
  if (s == Statistics::Fermi) {
    if (x >= 0) {
      const double e = std::exp(-x);
      return e / (1.0 + e);
    }
    return 1.0 / (std::exp(x) + 1.0);
  }
  return 1.0 / std::expm1(x);
}

/// e^x / (e^x - sigma)^2, i.e. d(occupation)/d(-x)
inline double occupation_slope_term(double x, Statistics s) {
  if (s == Statistics::Fermi) {
    const double e = std::exp(-std::abs(x));
    return e / ((1.0 + e) * (1.0 + e));
  }
  const double e = std::exp(-x);
  const double den = -std::expm1(-x);
  return e / (den * den);
}

inline double surface_over_2pi_d(int d) {
  const double surface = 2.0 * std::pow(constants::pi, 0.5 * d) / std::tgamma(0.5 * d);
  return surface / std::pow(constants::two_pi, d);
}

/// Radial breakpoints at the energy scales of a thermal integrand with
/// effective chemical potential mu_eff.
inline std::vector<double> thermal_breaks(double beta, double mu_eff, const DispersionRelation& disp) {
  std::vector<double> energies;
  const double thermal = 1.0 / beta;
  if (mu_eff < 0.0) {
    for (double e = std::abs(mu_eff) / 16.0; e < thermal; e *= 4.0) energies.push_back(e);
  } else if (mu_eff > 0.0) {
    for (double m = 64.0; m >= 1.0; m *= 0.5)
      if (mu_eff - m * thermal > 0.0) energies.push_back(mu_eff - m * thermal);
    energies.push_back(mu_eff);
  }
  const double base = std::max(mu_eff, 0.0);
  for (int j = -3; j <= 5; ++j) energies.push_back(base + std::ldexp(thermal, j));
  std::vector<double> ks{0.0};
  for (double e : energies) ks.push_back(disp.momentum_at(e));
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

/// S_d (2pi)^{-d} \int_0^inf k^{d-1} term(beta(eps(k) - mu_eff)) dk.
template <class Term>
quad::Estimate radial_thermal_integral(double beta, double mu_eff, Statistics stats,
                                       const DispersionRelation& disp, Term&& term, double tol) {
  const int d = disp.dimension();
  auto integrand = [&](double k) {
    const double x = beta * (disp(k) - mu_eff);
    const double w = d == 1 ? 1.0 : std::pow(k, d - 1);
    return w * term(x);
  };
  quad::Estimate e = quad::half_line(integrand, thermal_breaks(beta, mu_eff, disp), 0.1 * tol,
                                     stats == Statistics::Bose);
  const double c = surface_over_2pi_d(d);
  e.value *= c;
  e.error *= c;
  if (!(e.error <= tol * std::abs(e.value)) && e.value != 0.0)
    throw AccuracyError("equation-of-state quadrature missed its relative tolerance", e.error / std::abs(e.value));
  return e;
}

}  // namespace detail

// ============================================================================
// Operations
// ============================================================================

/// Mean occupation 1/(e^{beta(eps(k)-mu)} - sigma) of the mode |k|.
inline double occupation(double k, const ThermoState& state, const DispersionRelation& disp) {
  const double x = state.beta * (disp(k) - state.mu);
  if (state.stats == Statistics::Bose && !(x > 0.0))
    throw DomainError("Bose occupation needs eps(k) > mu (invalid chemical potential)");
  return detail::occupation_term(x, state.stats);
}

inline quad::Estimate pressure_estimate(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  state.validate();
  auto term = [s = state.stats](double x) { return detail::log_partition_term(x, s); };
  quad::Estimate e = detail::radial_thermal_integral(state.beta, state.mu, state.stats, disp, term, tol);
  e.value /= state.beta;
  e.error /= state.beta;
  return e;
}

inline quad::Estimate density_estimate(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  state.validate();
  auto term = [s = state.stats](double x) { return detail::occupation_term(x, s); };
  return detail::radial_thermal_integral(state.beta, state.mu, state.stats, disp, term, tol);
}

/// Grand-canonical pressure p(mu).
inline double pressure(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  return pressure_estimate(state, disp, tol).value;
}

/// Mean density rho(mu) = dp/dmu.
inline double density(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  return density_estimate(state, disp, tol).value;
}

/// d rho / d mu, integrand beta e^{x}/(e^{x} - sigma)^2.
inline double density_slope(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  state.validate();
  auto term = [s = state.stats, b = state.beta](double x) { return b * detail::occupation_slope_term(x, s); };
  return detail::radial_thermal_integral(state.beta, state.mu, state.stats, disp, term, tol).value;
}

inline EosResult equation_of_state(const ThermoState& state, const DispersionRelation& disp, double tol = 1e-12) {
  const auto p = pressure_estimate(state, disp, tol);
  const auto r = density_estimate(state, disp, tol);
  return {p.value, r.value, p.error, r.error};
}

/// Maximal normal-fluid density rho(0-) of the Bose gas; +inf for d <= gamma
/// and, by convention, for fermions.
inline Extended critical_density(Statistics stats, double beta, const DispersionRelation& disp, double tol = 1e-12) {
  if (!(beta > 0)) throw DomainError("beta must be positive");
  if (stats == Statistics::Fermi) return Extended::plus_infinity();
  if (disp.dimension() <= disp.small_k_exponent()) return Extended::plus_infinity();
  auto term = [](double x) { return 1.0 / std::expm1(x); };
  return Extended::finite(detail::radial_thermal_integral(beta, 0.0, stats, disp, term, tol).value);
}

/// Pressure at mu = 0 for bosons (finite limit), the ordinary pressure otherwise.
inline double pressure_at_condensation(double beta, const DispersionRelation& disp, double tol = 1e-12) {
  auto term = [](double x) { return detail::bose_log_term(x); };
  return detail::radial_thermal_integral(beta, 0.0, Statistics::Bose, disp, term, tol).value / beta;
}

/// g(lambda) = p(mu+lambda) - p(mu) (order 0) and its first two derivatives
/// rho(mu+lambda), rho'(mu+lambda) (orders 1, 2).
inline Extended translated_pressure(double lambda, const ThermoState& state, const DispersionRelation& disp,
                                    int order, double tol = 1e-12) {
  state.validate();
  if (order < 0 || order > 2) throw DomainError("translated_pressure order must be 0, 1 or 2");
  const ThermoState moved = state.shifted(lambda);
  if (state.stats == Statistics::Bose) {
    if (order == 0) {
      if (lambda > -state.mu) return Extended::plus_infinity();
      if (lambda == -state.mu) return Extended::finite(pressure_at_condensation(state.beta, disp, tol) - pressure(state, disp, tol));
    } else if (!(lambda < -state.mu)) {
      throw DomainError("Bose translated pressure derivatives need lambda < -mu");
    }
  }
  if (order == 0) {
    if (lambda == 0.0) return Extended::finite(0.0);
    return Extended::finite(pressure(moved, disp, tol) - pressure(state, disp, tol));
  }
  if (order == 1) return Extended::finite(density(moved, disp, tol));
  return Extended::finite(density_slope(moved, disp, tol));
}

/// |k| at which beta eps(k) = 1; the thermal length is its inverse.
inline double thermal_wavevector(double beta, const DispersionRelation& disp) {
  return disp.momentum_at(1.0 / beta);
}

}  // namespace qldp
