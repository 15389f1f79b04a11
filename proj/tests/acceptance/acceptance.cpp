// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance --only N   run criterion N (exit 1 when it fails)

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qldp/qldp.hpp"

using namespace qldp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Outcome::require(bool ok, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  if (!detail.empty()) detail += "; ";
  detail += buf;
  if (!ok) {
    detail += " [FAIL]";
    pass = false;
  }
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const DispersionRelation kLine = DispersionRelation::non_relativistic(1, 0.5);   // eps = k^2
const DispersionRelation kSpace = DispersionRelation::non_relativistic(3, 1.0);  // eps = k^2 / 2
const ThermoState kFermi{1.0, 0.0, Statistics::Fermi};
const double kSqrtPi2 = 2.0 * std::sqrt(oracle::pi);
const double kTwoPi32 = std::pow(2.0 * oracle::pi, 1.5);

std::shared_ptr<const KernelTable> fermi_kernel() {
  static const auto t = std::make_shared<const KernelTable>(build_kernel(kFermi, kLine, 0.05, 80.0));
  return t;
}

const CountingMatrix& fermi_matrix(double L) {
  static std::vector<std::unique_ptr<CountingMatrix>> cache;
  for (const auto& m : cache)
    if (m->length() == L) return *m;
  cache.push_back(std::make_unique<CountingMatrix>(fermi_kernel(), L, 0.05));
  return *cache.back();
}

// ---------------------------------------------------------------------------

Outcome eos_oracles() {
  Outcome o;
  const double p = pressure(kFermi, kLine), rho = density(kFermi, kLine);
  const double p_ref = oracle::eta(1.5) / kSqrtPi2, rho_ref = oracle::eta(0.5) / kSqrtPi2;
  o.require(rel(p, p_ref) < 1e-8, "FD p rel err %.2e", rel(p, p_ref));
  o.require(rel(rho, rho_ref) < 1e-8, "FD rho rel err %.2e", rel(rho, rho_ref));
  const double rc = critical_density(Statistics::Bose, 1.0, kSpace).value();
  const double rc_ref = oracle::zeta(1.5) / kTwoPi32;
  o.require(rel(rc, rc_ref) < 1e-6, "BE rho_c rel err %.2e", rel(rc, rc_ref));
  return o;
}

Outcome translated_structure() {
  Outcome o;
  struct Case {
    const char* name;
    ThermoState s;
    DispersionRelation d;
    double lo, hi;
  };
  const Case cases[] = {{"FD d=1", kFermi, kLine, -2.0, 2.0},
                        {"BE d=3", {1.0, -1.0, Statistics::Bose}, kSpace, -2.0, 0.95}};
  for (const Case& c : cases) {
    auto g = [&](double l) { return translated_pressure(l, c.s, c.d, 0).value(); };
    o.require(g(0.0) == 0.0, "%s g(0) = %g", c.name, g(0.0));
    const double step = 1e-4;
    const double slope = (g(step) - g(-step)) / (2 * step);
    const double rho_bar = c.s.stats == Statistics::Fermi ? oracle::eta(0.5) / kSqrtPi2
                                                          : oracle::polylog(1.5, std::exp(c.s.mu)) / kTwoPi32;
    o.require(rel(slope, rho_bar) < 1e-6, "%s |g'(0) - rho_bar| rel %.2e", c.name, rel(slope, rho_bar));
    std::vector<double> v(41);
    for (int i = 0; i < 41; ++i) v[i] = g(c.lo + (c.hi - c.lo) * i / 40.0);
    double worst = -INFINITY;
    for (int i = 1; i < 40; ++i) {
      const double chord = 0.5 * (v[i - 1] + v[i + 1]);
      worst = std::max(worst, (v[i] - chord) / std::max(std::abs(chord), 1e-300));
    }
    o.require(worst <= 1e-9, "%s convexity worst excess %.2e", c.name, worst);
  }
  return o;
}

Outcome legendre_duality() {
  Outcome o;
  struct Case {
    const char* name;
    RateContext ctx;
    double lo, hi;
  };
  const Case cases[] = {{"FD d=1", RateContext::make(kFermi, kLine), -1.0, 1.0},
                        {"BE d=3", RateContext::make({1.0, -1.0, Statistics::Bose}, kSpace), -1.0, 0.9}};
  for (const Case& c : cases) {
    const double x_top = c.ctx.critical_density.is_finite() ? c.ctx.critical_density.value() : 3.0;
    std::vector<double> xs, fs;
    for (int i = 1; i <= 600; ++i) {
      xs.push_back(x_top * i / 600.0);
      fs.push_back(rate_value(xs.back(), c.ctx).f.value());
    }
    double worst = 0.0;
    for (int j = 0; j <= 20; ++j) {
      const double l = c.lo + (c.hi - c.lo) * j / 20.0;
      if (l == 0.0) continue;
      std::size_t at = 0;
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (fs[i] + l * xs[i] > fs[at] + l * xs[at]) at = i;
      const double lo = at > 0 ? xs[at - 1] : 1e-9, hi = xs[std::min(at + 1, xs.size() - 1)];
      const double dual =
          oracle::golden_max([&](double x) { return rate_value(x, c.ctx).f.value() + l * x; }, lo, hi, 1e-11);
      worst = std::max(worst, rel(dual, c.ctx.g(l)));
    }
    o.require(worst < 1e-6, "%s double transform worst rel %.2e", c.name, worst);
  }
  const RateContext& be = cases[1].ctx;
  const double rc = be.critical_density.value();
  double d2 = 0.0, slope_err = 0.0;
  const int n = 21;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = rate_value(rc * (1.0 + i / (n - 1.0)), be).f.value();
  const double dx = rc / (n - 1.0);
  for (int i = 1; i + 1 < n; ++i) d2 = std::max(d2, std::abs(f[i + 1] - 2 * f[i] + f[i - 1]));
  for (int i = 0; i + 1 < n; ++i) slope_err = std::max(slope_err, std::abs((f[i + 1] - f[i]) / dx - be.state.mu));
  o.require(d2 < 1e-9, "BE segment max second difference %.2e", d2);
  o.require(slope_err < 1e-9, "segment slope - mu %.2e", slope_err);
  return o;
}

harness::ExperimentConfig fd_line_config(harness::ExperimentKind kind) {
  harness::ExperimentConfig c;
  c.kind = kind;
  c.disp.dimension = 1;
  c.disp.mass = 0.5;
  c.h = 0.05;
  return c;
}

Outcome generating_function() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  harness::ExperimentConfig c = fd_line_config(harness::ExperimentKind::Gf);
  c.lambdas = {-1.0, -0.5, 0.5, 1.0};
  c.sizes = {10, 20, 40, 80};
  const harness::ExperimentRecord r = harness::run_experiment(c);
  o.require(r.complete, "sweep complete%s%s", r.complete ? "" : ": ", r.failure.c_str());
  if (!r.complete) return o;
  const auto col_l = r.column("lambda"), col_gap = r.column("gap"), col_rel = r.column("rel_gap"),
             col_target = r.column("target_g");
  for (double lam : c.lambdas) {
    // The harness target comes from the thermo module; recompute it by Simpson.
    auto pint = [](double mu) { return [mu](double k) { return std::log1p(std::exp(mu - k * k)) / oracle::pi; }; };
    const double g_ref = oracle::simpson(pint(lam), 0.0, 12.0, 40000) - oracle::simpson(pint(0.0), 0.0, 12.0, 40000);
    std::vector<const std::vector<double>*> rows;
    for (const auto& row : r.rows)
      if (row[col_l] == lam) rows.push_back(&row);
    bool mono = true;
    double rmin = INFINITY, rmax = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double q = (*rows[i])[col_gap] / (*rows[i - 1])[col_gap];
      mono = mono && q < 1.0;
      rmin = std::min(rmin, q);
      rmax = std::max(rmax, q);
    }
    const double final_rel = (*rows.back())[col_rel];
    o.require(rel((*rows.back())[col_target], g_ref) < 1e-8, "lambda=%g target vs Simpson %.1e", lam,
              rel((*rows.back())[col_target], g_ref));
    o.require(mono && final_rel < 0.02 && rmin >= 0.3 && rmax <= 0.8,
              "lambda=%g monotone=%d rel_gap(80)=%.4f ratios [%.3f, %.3f]", lam, mono, final_rel, rmin, rmax);
  }
  const double dt = seconds_since(t0);
  o.require(dt < 300.0, "runtime %.1f s", dt);
  return o;
}

Outcome trace_moment_limits() {
  Outcome o;
  const auto t40 = trace_moments(fermi_matrix(40.0), 4);
  const auto t80 = trace_moments(fermi_matrix(80.0), 4);
  o.require(t40[0].gap < 1e-6 && t80[0].gap < 1e-6, "m=1 gap %.2e / %.2e", t40[0].gap, t80[0].gap);
  for (int m = 2; m <= 4; ++m) {
    // independent target: (1/pi) int_0^inf dhat^m dk by Simpson
    const double target =
        oracle::simpson([m](double k) { return std::pow(1.0 / (1.0 + std::exp(k * k)), m); }, 0.0, 10.0, 20000) /
        oracle::pi;
    const double g40 = rel(t40[m - 1].value, target), g80 = rel(t80[m - 1].value, target);
    o.require(g40 < 0.05 && g80 < g40, "m=%d gap L=40 %.4f -> L=80 %.4f", m, g40, g80);
  }
  return o;
}

Outcome spectrum_containment() {
  Outcome o;
  const ThermoState bose{1.0, -1.0, Statistics::Bose};
  const auto bk = std::make_shared<const KernelTable>(build_kernel(bose, kLine, 0.05, 80.0));
  double worst_f = 0.0, worst_b = 0.0;
  int built = 0;
  for (double L : {10.0, 20.0, 40.0, 80.0}) {
    try {
      const CountingMatrix& f = fermi_matrix(L);
      worst_f = std::max(worst_f, f.max_violation() / f.norm());
      const CountingMatrix b(bk, L, 0.05);
      worst_b = std::max(worst_b, b.max_violation() / b.norm());
      built += 2;
    } catch (const DiscretizationError& e) {
      o.require(false, "L=%g: %s", L, e.what());
    }
  }
  o.require(built == 8, "%d matrices built", built);
  o.require(worst_f <= 1e-8, "FD worst excursion %.2e ||K||", worst_f);
  o.require(worst_b <= 1e-8, "BE worst excursion %.2e ||K||", worst_b);
  return o;
}

Outcome boson_lambda_max() {
  Outcome o;
  const ThermoState bose{1.0, -1.0, Statistics::Bose};
  const auto bk = std::make_shared<const KernelTable>(build_kernel(bose, kLine, 0.05, 80.0));
  double prev = INFINITY;
  bool decreasing = true, above = true;
  std::string values;
  for (double L : {10.0, 20.0, 40.0}) {
    const double lm = lambda_max(CountingMatrix(bk, L, 0.05)).value.value();
    decreasing = decreasing && lm < prev;
    above = above && lm > 1.0;
    prev = lm;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.5f", values.empty() ? "" : ", ", lm);
    values += buf;
  }
  o.require(decreasing && above, "lambda_max = %s", values.c_str());
  return o;
}

Outcome ldp_at_desk_scale() {
  Outcome o;
  harness::ExperimentConfig c = fd_line_config(harness::ExperimentKind::Ldp);
  c.a = 0.25;
  c.b = 0.30;
  c.sizes = {20, 40, 80};
  const harness::ExperimentRecord r = harness::run_experiment(c);
  o.require(r.complete, "sweep complete%s%s", r.complete ? "" : ": ", r.failure.c_str());
  if (!r.complete) return o;
  const auto col_v = r.column("log_prob_rate"), col_t = r.column("target_f"), col_b = r.column("chebyshev_bound");
  const RateContext ctx = RateContext::make(kFermi, kLine);
  const double f_grid = oracle::grid_min([&](double l) { return ctx.g(l) - 0.25 * l; }, -6.0, 6.0, 1e-4);
  o.require(std::abs(r.rows[0][col_t] - f_grid) < 1e-8, "f(0.25) = %.8f (grid %.8f)", r.rows[0][col_t], f_grid);
  double prev = INFINITY;
  bool mono = true, bound = true;
  for (const auto& row : r.rows) {
    const double gap = std::abs(row[col_v] - row[col_t]);
    mono = mono && gap < prev;
    prev = gap;
    bound = bound && row[col_v] <= row[col_b];
  }
  o.require(mono, "gap %.4f -> %.4f -> %.4f", std::abs(r.rows[0][col_v] - r.rows[0][col_t]),
            std::abs(r.rows[1][col_v] - r.rows[1][col_t]), std::abs(r.rows[2][col_v] - r.rows[2][col_t]));
  o.require(bound, "Chebyshev bound holds at every L");
  return o;
}

Outcome clt_cumulants() {
  Outcome o;
  const double target = oracle::eta(-0.5) / kSqrtPi2;
  const CltCumulants c80 = cumulants_clt(fermi_matrix(80.0));
  const CltCumulants c20 = cumulants_clt(fermi_matrix(20.0));
  o.require(std::abs(target - 0.10724) < 1e-4, "target %.6f", target);
  o.require(rel(c80.c[1], target) < 0.02, "C(2) at L=80 = %.6f (rel %.4f)", c80.c[1], rel(c80.c[1], target));
  const double ratio = std::abs(c80.c[2]) / std::abs(c20.c[2]);
  o.require(ratio < 0.6, "|C(3)| L=80 / L=20 = %.3f", ratio);
  return o;
}

Outcome tilting() {
  Outcome o;
  const RateContext ctx = RateContext::make(kFermi, kLine);
  const double l0 = minimizer(0.25, ctx).value();
  const TiltedMoments t = tilted_moments(fermi_matrix(80.0), l0);
  o.require(rel(t.mean_density, 0.25) < 0.02, "lambda0 = %.6f, tilted mean %.6f", l0, t.mean_density);
  // d rho / d mu at mu + lambda0 by Simpson on the occupation slope
  const double slope = oracle::simpson(
                           [l0](double k) {
                             const double e = std::exp(k * k - l0);
                             return e / ((e + 1.0) * (e + 1.0)) / oracle::pi;
                           },
                           0.0, 12.0, 40000);
  o.require(rel(t.scaled_variance, slope) < 0.1, "beta var/L = %.6f vs %.6f", t.scaled_variance, slope);
  return o;
}

Outcome kernel_decay() {
  Outcome o;
  const DecayFit f1 = decay_exponent(*fermi_kernel(), 2.0, 20.0);
  o.require(f1.slope <= -1.5, "FD d=1 slope %.3f", f1.slope);
  // A |k| dispersion gives a power-law kernel, so the 1e-12 boundary level
  // is out of reach at any desk-scale extent; the table is flagged instead.
  KernelOptions flag_only;
  flag_only.require_boundary_decay = false;
  const KernelTable t3 = build_kernel(kFermi, DispersionRelation::massless(3, 1.0), 0.25, 48.0, flag_only);
  const DecayFit f3 = decay_exponent(t3, 4.0, 40.0);
  o.require(f3.slope <= -3.5, "FD d=3 massless slope %.3f (boundary ratio %.1e)", f3.slope, t3.boundary_ratio);
  return o;
}

Outcome kac_distribution() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  harness::ExperimentConfig c;
  c.kind = harness::ExperimentKind::Kac;
  c.stats = Statistics::Bose;
  c.disp.dimension = 3;
  c.disp.mass = 1.0;
  c.mu = -0.5;
  c.sizes = {12, 16};
  c.samples = 10000;
  c.seed = 2026;
  const harness::ExperimentRecord r = harness::run_experiment(c);
  o.require(r.complete, "sweep complete%s%s", r.complete ? "" : ": ", r.failure.c_str());
  if (!r.complete) return o;
  const auto& last = r.rows.back();
  const double ks = last[r.column("ks")];
  const double v12 = r.rows[0][r.column("sample_variance")], v16 = last[r.column("sample_variance")];
  o.require(ks < 0.05, "KS(l=16) = %.4f (finite-volume shift %.4f)", ks, last[r.column("ks_finite_volume")]);
  o.require(v16 / v12 >= 0.5 && v16 / v12 <= 2.0, "variance l=12 %.5f, l=16 %.5f, ratio %.3f", v12, v16, v16 / v12);
  const double dt = seconds_since(t0);
  o.require(dt < 600.0, "runtime %.1f s", dt);
  return o;
}

Outcome determinism() {
  Outcome o;
  harness::ExperimentConfig kac;
  kac.kind = harness::ExperimentKind::Kac;
  kac.stats = Statistics::Bose;
  kac.disp.dimension = 3;
  kac.disp.mass = 1.0;
  kac.mu = -0.5;
  kac.sizes = {6, 8};
  kac.samples = 2000;
  kac.seed = 77;
  harness::ExperimentConfig ldp = fd_line_config(harness::ExperimentKind::Ldp);
  ldp.a = 0.25;
  ldp.b = 0.30;
  ldp.sizes = {20, 40};
  for (const harness::ExperimentConfig& c : {kac, ldp}) {
    const std::string a = harness::record_json(harness::run_experiment(c));
    const std::string b = harness::record_json(harness::run_experiment(c));
    o.require(a == b, "%s: %zu-byte payloads %s", std::string(harness::to_string(c.kind)).c_str(), a.size(),
              a == b ? "identical" : "differ");
  }
  // Thread count must not change the numbers.
  ::setenv("QLDP_THREADS", "3", 1);
  const std::string threaded = harness::record_json(harness::run_experiment(kac));
  ::unsetenv("QLDP_THREADS");
  const std::string serial = harness::record_json(harness::run_experiment(kac));
  o.require(threaded == serial, "kac payload with QLDP_THREADS=3 %s", threaded == serial ? "identical" : "differs");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "EOS oracle equivalence", eos_oracles},
      {2, "translated-pressure structure", translated_structure},
      {3, "Legendre duality and condensation segment", legendre_duality},
      {4, "generating function converges to g", generating_function},
      {5, "trace moments", trace_moment_limits},
      {6, "spectrum containment", spectrum_containment},
      {7, "boson lambda_max decreases to -mu", boson_lambda_max},
      {8, "finite-volume LDP and Chebyshev bound", ldp_at_desk_scale},
      {9, "CLT cumulants", clt_cumulants},
      {10, "exponential tilting", tilting},
      {11, "kernel decay", kernel_decay},
      {12, "Kac distribution", kac_distribution},
      {13, "determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const Criterion& c : criteria()) {
    if (only && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %2d %s  %s (%.1f s): %s\n", c.id, out.pass ? "PASS" : "FAIL", c.title, seconds_since(t0),
                out.detail.c_str());
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed ? 1 : 0;
}
