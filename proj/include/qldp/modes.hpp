// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file modes.hpp
 * @brief Ideal gas in a periodic box of side ell: the dual lattice
 *        k in (2 pi Z / ell)^d, per-mode occupation laws, finite-volume
 *        pressure, the tilt solving rho^V(mu + lambda_V) = a, exact and
 *        sampled laws of N_V, and the Kac-law test above rho_c.
 *
 * Modes are grouped into shells of equal |n|^2 (n in Z^d); every shell
 * carries its multiplicity, i.e. the number of lattice vectors on it.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/counting.hpp"
#include "qldp/io.hpp"
#include "qldp/roots.hpp"
#include "qldp/thermo.hpp"

namespace qldp {

struct Shell {
  std::int64_t n2 = 0;          ///< |n|^2
  std::int64_t multiplicity = 0;
  double k = 0.0;               ///< 2 pi sqrt(n2) / ell
  double energy = 0.0;          ///< eps(k)
};

struct LatticeOptions {
  double occupation_cutoff = 1e-12;
  /// Largest chemical potential the lattice will be tilted to; truncation is
  /// decided there. Empty means the reference mu. For BE it may be 0.
  std::optional<double> mu_ceiling;
};

class ModeLattice {
 public:
  ModeLattice(const ThermoState& state, const DispersionRelation& disp, double ell, const LatticeOptions& opt = {});

  const ThermoState& state() const { return state_; }
  const DispersionRelation& dispersion() const { return disp_; }
  int dimension() const { return disp_.dimension(); }
  double side() const noexcept { return ell_; }
  double volume() const noexcept { return volume_; }
  double mu_ceiling() const noexcept { return mu_ceiling_; }
  const std::vector<Shell>& shells() const { return shells_; }
  std::int64_t mode_count() const noexcept { return modes_; }
  /// Mean occupation (at mu_ceiling) of the retained and the discarded modes.
  double retained_mass() const noexcept { return retained_; }
  double discarded_mass() const noexcept { return discarded_; }

  /// beta (eps - mu - lambda) on a shell; throws when a BE mode would diverge.
  double exponent(const Shell& s, double lambda) const {
    const double x = state_.beta * (s.energy - (state_.mu + lambda));
    if (state_.stats == Statistics::Bose && !(x > 0.0))
      throw DomainError("Bose tilt pushes mu + lambda to or above a mode energy");
    return x;
  }
  void check_tilt(double lambda) const {
    if (state_.mu + lambda > mu_ceiling_ + 1e-12 * std::max(1.0, std::abs(mu_ceiling_)))
      throw DomainError("tilt exceeds the chemical potential the lattice was truncated for");
    if (state_.stats == Statistics::Bose && !(state_.mu + lambda < 0.0))
      throw DomainError("Bose tilt needs mu + lambda < 0");
  }

  /// rho^V(mu + lambda) = ell^{-d} sum_k <n_k>.
  double mean_density(double lambda) const {
    double s = 0.0;
    for (const Shell& sh : shells_) s += static_cast<double>(sh.multiplicity) * detail::occupation_term(exponent(sh, lambda), state_.stats);
    return s / volume_;
  }
  /// Mean density of all modes except k = 0.
  double excited_density(double lambda) const {
    double s = 0.0;
    for (const Shell& sh : shells_)
      if (sh.n2 != 0) s += static_cast<double>(sh.multiplicity) * detail::occupation_term(exponent(sh, lambda), state_.stats);
    return s / volume_;
  }

 private:
  ThermoState state_;
  DispersionRelation disp_;
  double ell_, volume_;
  double mu_ceiling_;
  std::vector<Shell> shells_;
  std::int64_t modes_ = 0;
  double retained_ = 0.0, discarded_ = 0.0;
};

namespace detail {

/// r_d(s): number of n in Z^d with |n|^2 = s, for s = 0..s_max.
inline std::vector<std::int64_t> representation_counts(int d, std::int64_t s_max) {
  std::vector<std::int64_t> r(static_cast<std::size_t>(s_max + 1), 0);
  r[0] = 1;
  for (int dim = 0; dim < d; ++dim) {
    std::vector<std::int64_t> next(r.size(), 0);
    for (std::int64_t s = 0; s <= s_max; ++s) {
      if (r[static_cast<std::size_t>(s)] == 0) continue;
      for (std::int64_t j = 0; s + j * j <= s_max; ++j)
        next[static_cast<std::size_t>(s + j * j)] += r[static_cast<std::size_t>(s)] * (j == 0 ? 1 : 2);
    }
    r = std::move(next);
  }
  return r;
}

/// Energy at which the mean occupation equals `occ`, for chemical potential mu.
inline double cutoff_energy(double occ, double mu, double beta, Statistics s) {
  const double x = s == Statistics::Fermi ? std::log(1.0 / occ - 1.0) : std::log1p(1.0 / occ);
  return mu + x / beta;
}

}  // namespace detail

inline ModeLattice::ModeLattice(const ThermoState& state, const DispersionRelation& disp, double ell,
                                const LatticeOptions& opt)
    : state_(state), disp_(disp), ell_(ell) {
  state_.validate();
  if (!(ell > 0.0) || !std::isfinite(ell)) throw DomainError("box side ell must be positive");
  if (!(opt.occupation_cutoff > 0.0 && opt.occupation_cutoff < 0.5))
    throw DomainError("occupation cutoff must lie in (0, 1/2)");
  const int d = disp.dimension();
  volume_ = std::pow(ell, d);
  mu_ceiling_ = opt.mu_ceiling.value_or(state.mu);
  if (mu_ceiling_ < state.mu) throw DomainError("mu_ceiling must not lie below mu");
  if (state.stats == Statistics::Bose && mu_ceiling_ > 0.0) throw DomainError("Bose mu_ceiling must be <= 0");

  const double step = constants::two_pi / ell;
  auto shell_limit = [&](double occ) {
    const double e = detail::cutoff_energy(occ, mu_ceiling_, state.beta, state.stats);
    if (!(e > 0.0)) return std::int64_t{0};
    const double kc = disp.momentum_at(e) / step;
    return static_cast<std::int64_t>(std::floor(kc * kc));
  };
  const std::int64_t s_keep = shell_limit(opt.occupation_cutoff);
  // Discarded mass is summed out to occupation 1e-30 of the cutoff.
  const std::int64_t s_far = std::max(s_keep, shell_limit(opt.occupation_cutoff * 1e-30));
  if (s_far > 50'000'000) throw ResourceError("mode lattice too large; lower beta or ell");
  const std::vector<std::int64_t> r = detail::representation_counts(d, s_far);

  for (std::int64_t s = 0; s <= s_far; ++s) {
    const std::int64_t m = r[static_cast<std::size_t>(s)];
    if (m == 0) continue;
    Shell sh{s, m, step * std::sqrt(static_cast<double>(s)), 0.0};
    sh.energy = s == 0 ? 0.0 : disp(sh.k);
    const double x = state.beta * (sh.energy - mu_ceiling_);
    const double occ = (state.stats == Statistics::Bose && !(x > 0.0)) ? std::numeric_limits<double>::infinity()
                                                                       : detail::occupation_term(x, state.stats);
    if (s <= s_keep || s == 0) {
      shells_.push_back(sh);
      modes_ += m;
      if (std::isfinite(occ)) retained_ += static_cast<double>(m) * occ;
    } else {
      discarded_ += static_cast<double>(m) * occ;
    }
  }
}

/// Finite-volume pressure (beta ell^d)^{-1} log Xi^V(mu + lambda).
inline double box_pressure(const ModeLattice& lat, double lambda = 0.0) {
  lat.check_tilt(lambda);
  double s = 0.0;
  for (const Shell& sh : lat.shells())
    s += static_cast<double>(sh.multiplicity) * detail::log_partition_term(lat.exponent(sh, lambda), lat.state().stats);
  return s / (lat.state().beta * lat.volume());
}

/// (log Xi(mu + lambda) - log Xi(mu)) / (beta ell^d), summed mode by mode.
inline double box_translated_pressure(const ModeLattice& lat, double lambda) {
  lat.check_tilt(lambda);
  double s = 0.0;
  for (const Shell& sh : lat.shells())
    s += static_cast<double>(sh.multiplicity) *
         (detail::log_partition_term(lat.exponent(sh, lambda), lat.state().stats) -
          detail::log_partition_term(lat.exponent(sh, 0.0), lat.state().stats));
  return s / (lat.state().beta * lat.volume());
}

/// log <zeta^{N_V}> = sum_k -sigma log((1 - sigma zeta w_k) / (1 - sigma w_k)),  w_k = e^{-beta(eps - mu)}.
inline Extended box_log_pgf(const ModeLattice& lat, double zeta) {
  if (!(zeta > 0.0)) throw DomainError("box_log_pgf needs zeta > 0");
  const double sigma = lat.state().sigma();
  double s = 0.0;
  for (const Shell& sh : lat.shells()) {
    const double w = std::exp(-lat.exponent(sh, 0.0));
    const double num = 1.0 - sigma * zeta * w;
    if (!(num > 0.0)) return Extended::plus_infinity();
    s += static_cast<double>(sh.multiplicity) * -sigma * (std::log(num) - std::log1p(-sigma * w));
  }
  return Extended::finite(s);
}

/// Exact law of N_V at tilt lambda by sequential convolution over modes;
/// the support is cut where the remaining mass is below `tail_tol`.
inline CountingDistribution box_pmf(const ModeLattice& lat, double lambda = 0.0, double tail_tol = 1e-14,
                                    std::int64_t max_modes = 100'000) {
  if (lat.mode_count() > max_modes)
    throw ResourceError("box_pmf supports at most " + std::to_string(max_modes) + " modes (lattice has " +
                        std::to_string(lat.mode_count()) + "); use sample_NV instead");
  lat.check_tilt(lambda);
  CountingDistribution out;
  out.stats = lat.state().stats;
  out.beta = lat.state().beta;
  out.volume = lat.volume();
  std::vector<double> p;
  for (const Shell& sh : lat.shells()) {
    const double x = lat.exponent(sh, lambda);
    const double occ = detail::occupation_term(x, out.stats);
    for (std::int64_t i = 0; i < sh.multiplicity; ++i) {
      if (out.stats == Statistics::Fermi) {
        detail::bernoulli_cumulants(occ, out.cumulants);
        p.push_back(occ);
      } else {
        detail::geometric_cumulants(occ, out.cumulants);
        p.push_back(std::exp(-x));
      }
    }
  }
  out.mean = out.cumulants[0];
  out.variance = out.cumulants[1];
  if (out.stats == Statistics::Fermi) {
    out.pmf = detail::bernoulli_sum_pmf(p);
    double total = 0.0;
    for (double v : out.pmf) total += v;
    out.tail_mass = std::max(0.0, 1.0 - total);
  } else {
    out.pmf = detail::geometric_sum_pmf_adaptive(p, out.mean, out.variance, tail_tol, out.tail_mass);
  }
  return out;
}

/// lambda_V with rho^V(mu + lambda_V) = a.
inline double solve_lambda_V(const ModeLattice& lat, double a, double tol = 1e-12) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("target density a must be positive");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const ThermoState& st = lat.state();
  const double beta = st.beta;
  // Solve in the effective chemical potential u = mu + lambda.
  auto residual = [&](double u) { return lat.mean_density(u - st.mu) - a; };
  const double rtol = tol * a;
  const double base = residual(st.mu);
  if (std::abs(base) <= rtol) return 0.0;

  double lo = st.mu, hi = st.mu;
  if (base < 0.0) {
    const double ceiling = lat.mu_ceiling();
    if (st.stats == Statistics::Bose) {
      // The k = 0 occupation diverges as u -> 0^-, so a bracket exists below 0.
      const double top = std::min(ceiling, 0.0);
      const double gap0 = top - st.mu;
      int j = 1;
      for (hi = top - 0.5 * gap0; residual(hi) < 0.0; hi = top - std::ldexp(gap0, -j)) {
        if (++j > 200 || !(hi < top)) throw AccuracyError("no bracket for lambda_V below mode-0 divergence", a);
        lo = hi;
      }
    } else {
      // Truncation was decided at mu_ceiling, so the bracket may not pass it.
      int j = 0;
      for (hi = std::min(ceiling, st.mu + 1.0 / beta); residual(hi) < 0.0;
           hi = std::min(ceiling, st.mu + std::ldexp(1.0 / beta, j))) {
        if (hi >= ceiling)
          throw AccuracyError("lambda_V lies above mu_ceiling; rebuild the lattice with a larger ceiling", a);
        if (++j > 60) throw AccuracyError("no bracket for lambda_V (target above the band filling?)", a);
        lo = hi;
      }
    }
  } else {
    int j = 0;
    for (lo = st.mu - 1.0 / beta; residual(lo) > 0.0; lo = st.mu - std::ldexp(1.0 / beta, j)) {
      if (++j > 60) throw AccuracyError("no bracket for lambda_V below mu", a);
      hi = lo;
    }
  }
  const roots::Root r = roots::solve_increasing(residual, lo, hi, rtol);
  if (!(std::abs(r.residual) <= rtol)) throw AccuracyError("lambda_V residual above tolerance", std::abs(r.residual) / a);
  return r.x - st.mu;
}

// ============================================================================
// Sampling
// ============================================================================

namespace detail {

/// Uniform variate in (0, 1) from the top 53 bits.
inline double open_uniform(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

inline unsigned thread_count() {
  if (const char* env = std::getenv("QLDP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(std::min(v, 256L));
  }
  return 1;
}

inline constexpr std::size_t kSampleBlock = 256;

}  // namespace detail

struct SampleSet {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> densities;  ///< N_V / ell^d per replica
  double mean() const {
    double s = 0.0;
    for (double v : densities) s += v;
    return densities.empty() ? 0.0 : s / static_cast<double>(densities.size());
  }
  double variance() const {
    const double m = mean();
    double s = 0.0;
    for (double v : densities) s += (v - m) * (v - m);
    return densities.size() < 2 ? 0.0 : s / static_cast<double>(densities.size() - 1);
  }
};

/// Independent draws of N_V / ell^d at tilt lambda. Replicas are grouped in
/// blocks of 256, each block seeded by (seed, block index), so results do not
/// depend on the number of threads (QLDP_THREADS).
inline SampleSet sample_NV(const ModeLattice& lat, double lambda, std::size_t samples, std::uint64_t seed) {
  lat.check_tilt(lambda);
  const bool fermi = lat.state().stats == Statistics::Fermi;
  struct Law {
    std::int64_t multiplicity;
    double p;      ///< FD: occupation probability; BE: q = e^{-x}
    double log_q;  ///< BE only
  };
  std::vector<Law> laws;
  for (const Shell& sh : lat.shells()) {
    const double x = lat.exponent(sh, lambda);
    if (fermi) laws.push_back({sh.multiplicity, detail::occupation_term(x, Statistics::Fermi), 0.0});
    else laws.push_back({sh.multiplicity, std::exp(-x), -x});
  }

  SampleSet out{lambda, seed, std::vector<double>(samples, 0.0)};
  const double inv_volume = 1.0 / lat.volume();
  const std::size_t blocks = (samples + detail::kSampleBlock - 1) / detail::kSampleBlock;
  auto run_block = [&](std::size_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::mt19937_64 gen(seq);
    const std::size_t end = std::min(samples, (b + 1) * detail::kSampleBlock);
    for (std::size_t i = b * detail::kSampleBlock; i < end; ++i) {
      std::int64_t n = 0;
      for (const Law& law : laws) {
        for (std::int64_t j = 0; j < law.multiplicity; ++j) {
          const double u = detail::open_uniform(gen);
          if (fermi) {
            n += u < law.p ? 1 : 0;
          } else if (u < law.p) {
            // Inverse CDF of P(n) = (1-q) q^n: floor(log u / log q).
            n += static_cast<std::int64_t>(std::floor(std::log(u) / law.log_q));
          }
        }
      }
      out.densities[i] = static_cast<double>(n) * inv_volume;
    }
  };
  const unsigned threads = std::min<unsigned>(detail::thread_count(), static_cast<unsigned>(std::max<std::size_t>(blocks, 1)));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run_block(b);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

/// Kolmogorov-Smirnov distance between the empirical law of `x` and a
/// continuous `cdf`.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf&& cdf) {
  if (x.empty()) throw DomainError("ks_distance needs samples");
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Ties: the empirical CDF jumps once over the whole run of equal values.
    std::size_t j = i;
    while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
    const double f = cdf(x[i]);
    d = std::max(d, std::max(static_cast<double>(j + 1) / n - f, f - static_cast<double>(i) / n));
    i = j;
  }
  return d;
}

/// 1 - exp(-(x - rho_c) / (a - rho_c)) on [rho_c, inf).
inline double kac_cdf(double x, double rho_c, double a) {
  if (x < rho_c) return 0.0;
  return -std::expm1(-(x - rho_c) / (a - rho_c));
}

struct KacResult {
  double a = 0.0;
  double rho_c = 0.0;          ///< infinite-volume critical density
  double lambda_V = 0.0;
  double ground_occupation = 0.0;  ///< mean k = 0 occupation at lambda_V
  double excited_density = 0.0;    ///< finite-volume normal-fluid density at lambda_V
  double ks = 0.0;                 ///< against the infinite-volume Kac law
  double ks_finite_volume = 0.0;   ///< against the law shifted to excited_density (diagnostic)
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  std::vector<double> quantiles;      ///< empirical quantiles at probabilities (i + 0.5) / 100
  std::vector<double> target_cdf;     ///< Kac CDF at those quantiles
  SampleSet samples;
};

/// Samples N_V / ell^3 at the tilt solving rho^V = a and compares with the
/// Kac law. The lattice must be BE in d = 3 and truncated for mu_ceiling = 0.
inline KacResult kac_test(const ModeLattice& lat, double a, std::size_t samples, std::uint64_t seed,
                          double quad_tol = 1e-12) {
  const ThermoState& st = lat.state();
  if (st.stats != Statistics::Bose) throw DomainError("kac_test needs Bose statistics");
  if (lat.dimension() != 3) throw DomainError("kac_test is defined for d = 3");
  const Extended rc = critical_density(st.stats, st.beta, lat.dispersion(), quad_tol);
  if (!rc.is_finite()) throw DomainError("kac_test needs a finite critical density");
  if (!(a > rc.value())) throw DomainError("kac_test needs a > rho_c");
  KacResult res;
  res.a = a;
  res.rho_c = rc.value();
  res.lambda_V = solve_lambda_V(lat, a);
  res.excited_density = lat.excited_density(res.lambda_V);
  res.ground_occupation = (a - res.excited_density) * lat.volume();
  res.samples = sample_NV(lat, res.lambda_V, samples, seed);
  res.sample_mean = res.samples.mean();
  res.sample_variance = res.samples.variance();
  res.ks = ks_distance(res.samples.densities, [&](double x) { return kac_cdf(x, res.rho_c, a); });
  res.ks_finite_volume =
      ks_distance(res.samples.densities, [&](double x) { return kac_cdf(x, res.excited_density, a); });
  std::vector<double> sorted = res.samples.densities;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) {
    const auto idx = static_cast<std::size_t>((i + 0.5) / 100.0 * static_cast<double>(sorted.size()));
    const double q = sorted[std::min(idx, sorted.size() - 1)];
    res.quantiles.push_back(q);
    res.target_cdf.push_back(kac_cdf(q, res.rho_c, a));
  }
  return res;
}

/// CSV of a sample set: replica, N_V / ell^d.
inline std::string samples_csv(const SampleSet& s) {
  std::string out = "# density samples: lambda=" + io::num(s.lambda) + " seed=" + std::to_string(s.seed) +
                    "\nreplica,density\n";
  for (std::size_t i = 0; i < s.densities.size(); ++i) out += std::to_string(i) + "," + io::num(s.densities[i]) + "\n";
  return out;
}

}  // namespace qldp
