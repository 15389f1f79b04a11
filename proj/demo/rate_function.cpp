// Prints the density rate function f(x) of the free Fermi and Bose gases
// together with the minimizing tilt lambda_0(x).
//
//   ./demo_rate_function

#include <cstdio>

#include "qldp/qldp.hpp"

int main() {
  using namespace qldp;

  const auto line = DispersionRelation::non_relativistic(1, 0.5);  // eps = k^2
  const RateContext fd = RateContext::make({1.0, 0.0, Statistics::Fermi}, line);
  std::printf("FD d=1 beta=1 mu=0   rho_bar = %.10f\n", fd.mean_density);
  std::printf("%8s %16s %16s\n", "x", "lambda_0", "f(x)");
  for (double x : {0.0, 0.05, 0.1, 0.17, 0.25, 0.3, 0.5, 1.0}) {
    const RatePoint p = rate_value(x, fd);
    std::printf("%8.3f %16s %16s\n", x, to_string(p.lambda0).c_str(), to_string(p.f).c_str());
  }

  // Above rho_c the Bose rate function is affine with slope mu.
  const auto space = DispersionRelation::non_relativistic(3, 1.0);  // eps = k^2 / 2
  const RateContext be = RateContext::make({1.0, -0.5, Statistics::Bose}, space);
  std::printf("\nBE d=3 beta=1 mu=-0.5   rho_bar = %.10f   rho_c = %.10f\n", be.mean_density,
              be.critical_density.value());
  std::printf("%8s %16s %16s\n", "x", "lambda_0", "f(x)");
  for (double x : {0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5}) {
    const RatePoint p = rate_value(x, be);
    std::printf("%8.3f %16s %16s%s\n", x, to_string(p.lambda0).c_str(), to_string(p.f).c_str(),
                be.in_condensed_regime(x) ? "   condensed" : "");
  }
  std::printf("\nsup f over [0.25, 0.30] (FD) = %s\n", to_string(interval_rate(0.25, 0.30, fd)).c_str());
  return 0;
}
