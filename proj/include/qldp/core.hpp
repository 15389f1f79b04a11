// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file core.hpp
 * @brief Error types, the statistics flag and the extended-real sentinel
 *        shared by every qldp module.
 */

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qldp {

// ============================================================================
// Errors
// ============================================================================

/// Short %.3g rendering used in diagnostic messages.
inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on physical parameters was violated (e.g. BE with mu >= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure did not reach its requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what + " (achieved estimate " + short_number(achieved) + ")"), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A discretized operator violates a property of its continuum limit.
class DiscretizationError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured resource bound.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : Error("config field '" + field + "': " + reason), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// ============================================================================
// Statistics flag
// ============================================================================

/// Particle statistics. The numeric value is the sign sigma used in the
/// occupation 1/(e^{beta(eps-mu)} - sigma): +1 for bosons, -1 for fermions.
enum class Statistics : int { Bose = +1, Fermi = -1 };

constexpr double sign(Statistics s) noexcept { return static_cast<int>(s); }

constexpr std::string_view to_string(Statistics s) noexcept {
  return s == Statistics::Bose ? "BE" : "FD";
}

inline Statistics parse_statistics(std::string_view text) {
  if (text == "BE" || text == "be" || text == "bose" || text == "Bose" || text == "+1")
    return Statistics::Bose;
  if (text == "FD" || text == "fd" || text == "fermi" || text == "Fermi" || text == "-1")
    return Statistics::Fermi;
  throw ConfigError("statistics", "expected BE or FD, got '" + std::string(text) + "'");
}

// ============================================================================
// Extended reals
// ============================================================================

/// A real number or one of the semantic infinities (rho_c = +inf for d <= gamma,
/// lambda_0 = -inf for x <= 0, ...). Kept distinct from IEEE overflow: a
/// finite Extended never holds an infinite double.
class Extended {
 public:
  enum class Kind { Finite, PlusInfinity, MinusInfinity };

  constexpr Extended() = default;

  static Extended finite(double v) {
    if (!std::isfinite(v)) throw AccuracyError("non-finite value where a finite one was expected", v);
    return Extended(Kind::Finite, v);
  }
  static constexpr Extended plus_infinity() { return Extended(Kind::PlusInfinity, 0.0); }
  static constexpr Extended minus_infinity() { return Extended(Kind::MinusInfinity, 0.0); }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::Finite; }
  constexpr bool is_plus_infinity() const noexcept { return kind_ == Kind::PlusInfinity; }
  constexpr bool is_minus_infinity() const noexcept { return kind_ == Kind::MinusInfinity; }

  double value() const {
    if (!is_finite()) throw DomainError("value() called on an infinite sentinel");
    return value_;
  }

  /// IEEE view: the sentinels map to +-infinity. For printing and comparisons only.
  constexpr double as_double() const noexcept {
    switch (kind_) {
      case Kind::PlusInfinity: return std::numeric_limits<double>::infinity();
      case Kind::MinusInfinity: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend constexpr bool operator==(const Extended&, const Extended&) = default;

 private:
  constexpr Extended(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

inline std::string to_string(const Extended& x) {
  if (x.is_plus_infinity()) return "+inf";
  if (x.is_minus_infinity()) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x.value());
  return buf;
}

namespace constants {
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;
}  // namespace constants

}  // namespace qldp
