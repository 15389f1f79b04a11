#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "qldp/counting.hpp"
#include "qldp/rate.hpp"

using namespace qldp;

namespace {

const DispersionRelation kLine = DispersionRelation::non_relativistic(1, 0.5);
const ThermoState kFermi{1.0, 0.0, Statistics::Fermi};
const ThermoState kBose{1.0, -1.0, Statistics::Bose};

std::shared_ptr<const KernelTable> fermi_kernel() {
  static const auto t = std::make_shared<const KernelTable>(build_kernel(kFermi, kLine, 0.05, 80.0));
  return t;
}
std::shared_ptr<const KernelTable> bose_kernel() {
  static const auto t = std::make_shared<const KernelTable>(build_kernel(kBose, kLine, 0.05, 80.0));
  return t;
}
const CountingMatrix& fermi20() {
  static const CountingMatrix m(fermi_kernel(), 20.0, 0.05);
  return m;
}
const CountingMatrix& fermi40() {
  static const CountingMatrix m(fermi_kernel(), 40.0, 0.05);
  return m;
}
const CountingMatrix& bose20() {
  static const CountingMatrix m(bose_kernel(), 20.0, 0.05);
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(CountingMatrix, SinglePoint) {
  const CountingMatrix m(fermi_kernel(), 0.05, 0.05);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m.matrix()(0, 0), 0.05 * fermi_kernel()->origin());
  EXPECT_DOUBLE_EQ(m.eigenvalues()[0], 0.05 * fermi_kernel()->origin());
}

TEST(CountingMatrix, SymmetricAndTraceIsOrigin) {
  const CountingMatrix& m = fermi20();
  EXPECT_EQ(m.size(), 400u);
  EXPECT_TRUE(m.matrix().isApprox(m.matrix().transpose(), 0.0));
  double tr = 0.0;
  for (double k : m.raw_eigenvalues()) tr += k;
  EXPECT_LT(rel(tr / m.volume(), fermi_kernel()->origin()), 1e-12);
  EXPECT_LT(rel(m.matrix().trace() / m.volume(), fermi_kernel()->origin()), 1e-14);
}

TEST(CountingMatrix, FermiSpectrumBelowHalf) {
  const CountingMatrix& m = fermi20();
  EXPECT_LE(m.raw_eigenvalues().back(), 0.5 + 1e-8);
  EXPECT_GE(m.raw_eigenvalues().front(), -m.spectral_tolerance());
  EXPECT_DOUBLE_EQ(m.allowed_hi(), 0.5);
  EXPECT_LE(m.max_violation(), m.spectral_tolerance());
  for (double k : m.eigenvalues()) {
    EXPECT_GE(k, 0.0);
    EXPECT_LE(k, 0.5);
  }
}

TEST(CountingMatrix, BoseSpectrumInsideInterval) {
  const CountingMatrix& m = bose20();
  const double lo = 1.0 / (1.0 - std::exp(1.0));
  EXPECT_NEAR(m.allowed_lo(), lo, 1e-15);
  EXPECT_GE(m.raw_eigenvalues().front(), lo - m.spectral_tolerance());
  EXPECT_LE(m.raw_eigenvalues().back(), m.spectral_tolerance());
}

TEST(CountingMatrix, Validation) {
  EXPECT_THROW(CountingMatrix(fermi_kernel(), 20.01, 0.05), DomainError);
  EXPECT_THROW(CountingMatrix(fermi_kernel(), 20.0, 0.07), DomainError);
  EXPECT_THROW(CountingMatrix(fermi_kernel(), 200.0, 0.05), DomainError);
  EXPECT_THROW(CountingMatrix(nullptr, 20.0, 0.05), DomainError);
  auto bare = std::make_shared<const KernelTable>(
      build_kernel(1, [](double k) { return std::exp(-k * k); }, {0.0, 1.0}, 0.05, 20.0));
  EXPECT_THROW(CountingMatrix(bare, 10.0, 0.05), DomainError);
}

TEST(CountingMatrix, CoarserMatrixSpacing) {
  const CountingMatrix m(fermi_kernel(), 20.0, 0.1);
  EXPECT_EQ(m.size(), 200u);
  EXPECT_DOUBLE_EQ(m.matrix()(0, 1), 0.1 * fermi_kernel()->at_offset(2));
}

TEST(GeneratingFunction, ZeroAtZeroAndMonotoneConvex) {
  const CountingMatrix& m = fermi20();
  EXPECT_EQ(log_generating_function(m, 0.0).value(), 0.0);
  std::vector<double> v;
  for (double l = -2.0; l <= 2.0 + 1e-12; l += 0.25) v.push_back(log_generating_function(m, l).value());
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_LE(v[i], 0.5 * (v[i - 1] + v[i + 1]) + 1e-15);
}

TEST(GeneratingFunction, NearInfiniteVolumeLimit) {
  const RateContext ctx = RateContext::make(kFermi, kLine);
  const double g = ctx.g(0.5);
  EXPECT_LT(rel(log_generating_function(fermi40(), 0.5).value(), g), 0.02);
  // the gap shrinks as L doubles
  EXPECT_LT(std::abs(log_generating_function(fermi40(), 0.5).value() - g),
            std::abs(log_generating_function(fermi20(), 0.5).value() - g));
}

TEST(GeneratingFunction, DerivativesAtZeroConverge) {
  const RateContext ctx = RateContext::make(kFermi, kLine);
  const double g1 = ctx.mean_density;
  const double g2 = density_slope(kFermi, kLine);
  const double step = 1e-3;
  double prev1 = INFINITY, prev2 = INFINITY;
  for (const CountingMatrix* m : {&fermi20(), &fermi40()}) {
    const double p = log_generating_function(*m, step).value(), q = log_generating_function(*m, -step).value();
    const double d1 = (p - q) / (2 * step);
    const double d2 = (p + q) / (step * step);
    EXPECT_LT(std::abs(d1 - g1), prev1);
    EXPECT_LT(std::abs(d2 - g2), prev2);
    prev1 = std::abs(d1 - g1);
    prev2 = std::abs(d2 - g2);
  }
}

TEST(GeneratingFunction, BoseDivergesAtLambdaMax) {
  const CountingMatrix& m = bose20();
  const LambdaMax lm = lambda_max(m);
  ASSERT_TRUE(lm.value.is_finite());
  EXPECT_GT(lm.value.value(), 1.0);
  EXPECT_TRUE(log_generating_function(m, lm.value.value() + 1e-6).is_plus_infinity());
  EXPECT_TRUE(log_generating_function(m, lm.value.value() - 1e-3).is_finite());
  EXPECT_THROW(tilted_moments(m, lm.value.value()), DomainError);
}

TEST(LambdaMax, FermiInfiniteAndBoseDecreasing) {
  EXPECT_TRUE(lambda_max(fermi20()).value.is_plus_infinity());
  EXPECT_FALSE(lambda_max(fermi20()).degenerate);
  const CountingMatrix m10(bose_kernel(), 10.0, 0.05);
  EXPECT_GT(lambda_max(m10).value.value(), lambda_max(bose20()).value.value());
}

TEST(TraceMoments, FirstIsExactSecondClose) {
  const auto tm = trace_moments(fermi40(), 4);
  ASSERT_EQ(tm.size(), 4u);
  EXPECT_LT(tm[0].gap, 1e-6);
  const double m2 = oracle::simpson([](double k) { return std::pow(1.0 / (1.0 + std::exp(k * k)), 2); }, 0.0, 10.0,
                                    20000) /
                    oracle::pi;
  EXPECT_LT(rel(tm[1].target, m2), 1e-10);
  EXPECT_LT(tm[1].gap, 0.05);
  EXPECT_THROW(trace_moments(fermi20(), 9), DomainError);
}

TEST(CountingPmf, BernoulliAndGeometricPieces) {
  const std::vector<double> half{0.5};
  const auto p = detail::bernoulli_sum_pmf(half);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  const std::vector<double> q{0.5};
  const auto g = detail::geometric_sum_pmf(q, 10);
  for (std::size_t n = 0; n < g.size(); ++n) EXPECT_NEAR(g[n], std::pow(0.5, n + 1), 1e-16);
}

TEST(CountingPmf, NormalizedMeanMatchesFactors) {
  for (const CountingMatrix* m : {&fermi40(), &bose20()}) {
    const CountingDistribution d = counting_pmf(*m);
    double total = d.tail_mass, mean = 0.0;
    for (std::size_t n = 0; n < d.pmf.size(); ++n) {
      total += d.pmf[n];
      mean += static_cast<double>(n) * d.pmf[n];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean, d.mean, 1e-10 * std::max(1.0, d.mean));
    double factor_mean = 0.0;
    for (double k : m->eigenvalues()) factor_mean += m->stats() == Statistics::Fermi ? k : -k;
    EXPECT_NEAR(d.mean, factor_mean, 1e-10 * std::max(1.0, d.mean));
    EXPECT_LT(d.tail_mass, 1e-14);
  }
  const CountingDistribution d = counting_pmf(fermi40());
  EXPECT_LT(rel(d.mean / 40.0, 0.170638756860326), 0.02);
}

TEST(CountingPmf, DeterminantIdentity) {
  for (const CountingMatrix* m : {&fermi20(), &bose20()}) {
    const CountingDistribution d = counting_pmf(*m);
    for (double zeta : {0.5, 0.8, 1.0, 1.2, 1.5}) {
      const double lhs = std::exp(log_pgf(*m, zeta).value());
      EXPECT_LT(rel(pmf_generating_function(d, zeta), lhs), 1e-10) << zeta;
    }
    for (double l : {-0.5, 0.3}) {
      const double lhs = std::exp(m->volume() * log_generating_function(*m, l).value());
      EXPECT_LT(rel(pmf_generating_function(d, std::exp(l)), lhs), 1e-10);
    }
  }
}

TEST(Ldp, TypicalEventAndEmptyRange) {
  const CountingDistribution d = counting_pmf(fermi40());
  const double typical = ldp_log_prob(d, 0.15, 0.19).value();
  const double smaller = ldp_log_prob(counting_pmf(fermi20()), 0.15, 0.19).value();
  EXPECT_LT(typical, 0.0);
  EXPECT_GT(typical, smaller);
  EXPECT_TRUE(ldp_log_prob(d, 0.2001, 0.2002).is_minus_infinity());
  EXPECT_TRUE(ldp_log_prob(d, -2.0, -1.0).is_minus_infinity());
  EXPECT_THROW(ldp_log_prob(d, 0.3, 0.2), DomainError);
}

TEST(Ldp, ChebyshevBoundHoldsExactly) {
  const auto grid = lambda_grid(-4.0, 4.0, 161);
  for (const CountingMatrix* m : {&fermi20(), &fermi40()}) {
    const CountingDistribution d = counting_pmf(*m);
    for (auto [a, b] : {std::pair{0.25, 0.30}, std::pair{0.05, 0.1}, std::pair{0.1, 0.2}}) {
      const Extended lp = ldp_log_prob(d, a, b);
      const ChebyshevBound cb = chebyshev_bound(*m, a, b, grid);
      if (lp.is_finite()) {
        EXPECT_LE(lp.value(), cb.value) << a << " " << b;
      }
    }
  }
}

TEST(Clt, CumulantsAndTarget) {
  const CltCumulants c = cumulants_clt(fermi40());
  EXPECT_EQ(c.c[0], 0.0);
  const double target = oracle::eta(-0.5) / (2.0 * std::sqrt(oracle::pi));
  EXPECT_LT(rel(c.variance_target, target), 1e-8);
  EXPECT_LT(rel(c.c[1], target), 0.05);
  const double eta_alt = oracle::eta_from_zeta(-0.5);
  EXPECT_LT(std::abs(oracle::eta(-0.5) - eta_alt), 1e-12);
}

TEST(Tilting, ZeroTiltIsUntilted) {
  const TiltedMoments t = tilted_moments(fermi20(), 0.0);
  const CountingDistribution d = counting_pmf(fermi20());
  EXPECT_NEAR(t.mean_density, d.mean / 20.0, 1e-14);
  EXPECT_NEAR(t.scaled_variance, d.variance / 20.0, 1e-14);
}

TEST(Tilting, VarianceIsSizeStable) {
  const RateContext ctx = RateContext::make(kFermi, kLine);
  const double l0 = minimizer(0.25, ctx).value();
  const double v20 = tilted_moments(fermi20(), l0).scaled_variance;
  const double v40 = tilted_moments(fermi40(), l0).scaled_variance;
  EXPECT_GE(v40 / v20, 0.8);
  EXPECT_LE(v40 / v20, 1.2);
  EXPECT_LT(rel(tilted_moments(fermi40(), l0).mean_density, 0.25), 0.02);
}

TEST(Csv, SpectrumAndPmf) {
  const CountingMatrix m(fermi_kernel(), 1.0, 0.05);
  const std::string s = spectrum_csv(m);
  EXPECT_NE(s.find("i,kappa,raw_kappa\n"), std::string::npos);
  const std::string p = pmf_csv(counting_pmf(m));
  EXPECT_NE(p.find("n,pmf\n0,"), std::string::npos);
}
