#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qldp/core.hpp"
#include "qldp/io.hpp"
#include "qldp/quadrature.hpp"
#include "qldp/roots.hpp"

using namespace qldp;

TEST(Extended, SentinelsAreDistinctFromFiniteValues) {
  EXPECT_TRUE(Extended::finite(1.5).is_finite());
  EXPECT_EQ(Extended::finite(1.5).value(), 1.5);
  EXPECT_TRUE(Extended::plus_infinity().is_plus_infinity());
  EXPECT_TRUE(Extended::minus_infinity().is_minus_infinity());
  EXPECT_THROW(Extended::plus_infinity().value(), DomainError);
  EXPECT_THROW(Extended::finite(INFINITY), AccuracyError);
  EXPECT_EQ(Extended::minus_infinity().as_double(), -INFINITY);
  EXPECT_EQ(to_string(Extended::plus_infinity()), "+inf");
  EXPECT_EQ(to_string(Extended::finite(0.25)), "0.25");
}

TEST(Statistics, SignAndParsing) {
  EXPECT_EQ(sign(Statistics::Bose), 1.0);
  EXPECT_EQ(sign(Statistics::Fermi), -1.0);
  EXPECT_EQ(parse_statistics("BE"), Statistics::Bose);
  EXPECT_EQ(parse_statistics("fermi"), Statistics::Fermi);
  try {
    parse_statistics("boltzmann");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "statistics");
  }
}

TEST(Errors, AllDeriveFromError) {
  EXPECT_THROW(throw DomainError("x"), Error);
  EXPECT_THROW(throw AccuracyError("x", 1e-3), Error);
  EXPECT_THROW(throw DiscretizationError("x"), Error);
  EXPECT_THROW(throw ResourceError("x"), Error);
  EXPECT_THROW(throw ConfigError("mu", "bad"), Error);
  const AccuracyError e("residual", 2.5e-7);
  EXPECT_EQ(e.achieved(), 2.5e-7);
  EXPECT_NE(std::string(e.what()).find("2.5e-07"), std::string::npos);
}

TEST(Quadrature, HalfLineGaussian) {
  auto f = [](double x) { return std::exp(-x * x); };
  const quad::Estimate e = quad::half_line(f, {0.0, 1.0, 4.0}, 1e-13);
  EXPECT_NEAR(e.value, std::sqrt(constants::pi) / 2, 1e-14);
  EXPECT_LT(e.error, 1e-12);
}

TEST(Quadrature, HalfLineIntegrableSingularity) {
  // int_0^inf x^{-1/2} e^{-x} dx = sqrt(pi)
  auto f = [](double x) { return std::exp(-x) / std::sqrt(x); };
  const quad::Estimate e = quad::half_line(f, {0.0, 1.0}, 1e-12, true);
  EXPECT_NEAR(e.value, std::sqrt(constants::pi), 1e-11);
}

TEST(Roots, IncreasingFunction) {
  const roots::Root r = roots::solve_increasing([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, 1e-14);
  EXPECT_NEAR(r.x, std::cbrt(2.0), 1e-13);
  EXPECT_THROW(roots::solve_increasing([](double x) { return x + 5.0; }, 0.0, 1.0, 1e-12), AccuracyError);
}

TEST(Io, NumRoundTripsAndNamesNonFinite) {
  EXPECT_EQ(io::num(INFINITY), "inf");
  EXPECT_EQ(io::num(-INFINITY), "-inf");
  EXPECT_EQ(io::num(NAN), "nan");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(io::num(v)), v);
}

TEST(Io, AtomicWriteLeavesNoTemporaries) {
  const auto dir = std::filesystem::temp_directory_path() / "qldp_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "out.txt";
  io::atomic_write(path, "first\n");
  io::atomic_write(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "second\n");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(path.parent_path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  std::filesystem::remove_all(dir);
}

TEST(Io, AtomicWriteErrorNamesPath) {
  const auto dir = std::filesystem::temp_directory_path() / "qldp_io_blocker";
  std::filesystem::remove_all(dir);
  { std::ofstream(dir) << "a file, not a directory"; }
  try {
    io::atomic_write(dir / "x.csv", "data");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("qldp_io_blocker"), std::string::npos);
  }
  std::filesystem::remove(dir);
}
