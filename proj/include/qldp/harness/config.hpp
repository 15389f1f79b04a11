// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file config.hpp
 * @brief Experiment configuration: plain `key = value` files.
 *
 * Lines starting with '#' and blank lines are ignored. Lists are comma or
 * whitespace separated. Recognized keys:
 *
 *   kind          eos | rate | kernel | gf | ldp | clt | modes | kac
 *   name          output file stem (default: kind)
 *   statistics    FD | BE
 *   dispersion    nonrel | rel | massless | table
 *   dimension     d
 *   mass, speed   dispersion parameters (nonrel uses eps = k^2 / (2 mass))
 *   table         two-column (k, eps) file for dispersion = table
 *   beta, mu      thermodynamic state
 *   lambdas       tilts for kind = gf
 *   a, b          density interval (ldp, modes; kac uses a, default 2 rho_c)
 *   x             density grid for kind = rate
 *   sizes         strictly increasing sweep (L, ell, or kernel extents X)
 *   h             grid spacing
 *   extent        kernel extent X (0 picks the sweep maximum / a default)
 *   window        decay-fit window "lo, hi" for kind = kernel
 *   samples, seed sampling controls
 *   quad_tol      quadrature tolerance
 *   gap_tol       relative gap required at the largest size
 *   ratio_min, ratio_max   accepted successive-gap ratios
 *   ks_tol        Kolmogorov-Smirnov threshold (kac)
 *   out           output directory
 *   format        csv | json | both
 */

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/io.hpp"
#include "qldp/thermo.hpp"

namespace qldp::harness {

enum class ExperimentKind { Eos, Rate, Kernel, Gf, Ldp, Clt, Modes, Kac };

inline constexpr std::string_view kKindNames[] = {"eos", "rate", "kernel", "gf", "ldp", "clt", "modes", "kac"};

inline std::string_view to_string(ExperimentKind k) { return kKindNames[static_cast<int>(k)]; }

inline ExperimentKind parse_kind(std::string_view s) {
  for (int i = 0; i < 8; ++i)
    if (kKindNames[i] == s) return static_cast<ExperimentKind>(i);
  throw ConfigError("kind", "unknown experiment kind '" + std::string(s) + "'");
}

enum class OutputFormat { Csv, Json, Both };

inline std::string_view to_string(OutputFormat f) {
  return f == OutputFormat::Csv ? "csv" : f == OutputFormat::Json ? "json" : "both";
}

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  if (s == "both") return OutputFormat::Both;
  throw ConfigError("format", "expected csv, json or both");
}

struct DispersionSpec {
  std::string kind = "nonrel";
  int dimension = 1;
  double mass = 0.5;
  double speed = 1.0;
  std::string table;

  DispersionRelation build() const {
    if (kind == "nonrel") return DispersionRelation::non_relativistic(dimension, mass);
    if (kind == "rel") return DispersionRelation::relativistic(dimension, mass, speed);
    if (kind == "massless") return DispersionRelation::massless(dimension, speed);
    if (kind == "table") return DispersionRelation::load_table(dimension, table);
    throw ConfigError("dispersion", "expected nonrel, rel, massless or table");
  }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Eos;
  std::string name;
  Statistics stats = Statistics::Fermi;
  DispersionSpec disp;
  double beta = 1.0;
  double mu = 0.0;
  std::vector<double> lambdas;
  double a = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> xs;
  std::vector<double> sizes;
  double h = 0.05;
  double extent = 0.0;
  double window_lo = std::numeric_limits<double>::quiet_NaN();
  double window_hi = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  double quad_tol = 1e-12;
  double gap_tol = 0.02;
  double ratio_min = 0.3;
  double ratio_max = 0.8;
  double ks_tol = 0.05;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::Both;

  std::string stem() const { return name.empty() ? std::string(to_string(kind)) : name; }
  ThermoState state() const { return {beta, mu, stats}; }
  bool has_interval() const { return !std::isnan(a) && !std::isnan(b); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& field, std::string_view text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty()) throw ConfigError(field, "not a number: '" + t + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& field, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(field, "not a non-negative integer: '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& field, std::string_view text) {
  std::string s(text);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  for (std::string tok; in >> tok;) out.push_back(parse_double(field, tok));
  return out;
}

inline std::string render_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::num(v[i]);
  return s;
}

}  // namespace detail

/// Applies one key/value pair to `cfg`.
inline void apply(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "kind") cfg.kind = parse_kind(value);
  else if (key == "name") cfg.name = value;
  else if (key == "statistics") {
    try {
      cfg.stats = parse_statistics(value);
    } catch (const ConfigError&) {
      throw ConfigError("statistics", "expected FD or BE, got '" + value + "'");
    }
  } else if (key == "dispersion") cfg.disp.kind = value;
  else if (key == "dimension") {
    const std::uint64_t d = parse_uint(key, value);
    if (d < 1 || d > 16) throw ConfigError(key, "dimension must be between 1 and 16");
    cfg.disp.dimension = static_cast<int>(d);
  } else if (key == "mass") cfg.disp.mass = parse_double(key, value);
  else if (key == "speed") cfg.disp.speed = parse_double(key, value);
  else if (key == "table") cfg.disp.table = value;
  else if (key == "beta") cfg.beta = parse_double(key, value);
  else if (key == "mu") cfg.mu = parse_double(key, value);
  else if (key == "lambdas" || key == "lambda") cfg.lambdas = parse_list(key, value);
  else if (key == "a") cfg.a = parse_double(key, value);
  else if (key == "b") cfg.b = parse_double(key, value);
  else if (key == "x") cfg.xs = parse_list(key, value);
  else if (key == "sizes") cfg.sizes = parse_list(key, value);
  else if (key == "h") cfg.h = parse_double(key, value);
  else if (key == "extent") cfg.extent = parse_double(key, value);
  else if (key == "window") {
    const auto w = parse_list(key, value);
    if (w.size() != 2) throw ConfigError(key, "expected two values 'lo, hi'");
    cfg.window_lo = w[0];
    cfg.window_hi = w[1];
  } else if (key == "samples") cfg.samples = parse_uint(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "quad_tol") cfg.quad_tol = parse_double(key, value);
  else if (key == "gap_tol") cfg.gap_tol = parse_double(key, value);
  else if (key == "ratio_min") cfg.ratio_min = parse_double(key, value);
  else if (key == "ratio_max") cfg.ratio_max = parse_double(key, value);
  else if (key == "ks_tol") cfg.ks_tol = parse_double(key, value);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "format") cfg.format = parse_format(value);
  else throw ConfigError(key, "unknown configuration key");
}

/// Checks cross-field invariants; throws ConfigError naming the field.
inline void validate(const ExperimentConfig& c) {
  auto positive = [](const char* field, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be a positive finite number");
  };
  positive("beta", c.beta);
  if (!std::isfinite(c.mu)) throw ConfigError("mu", "must be finite");
  if (c.stats == Statistics::Bose && !(c.mu < 0.0)) throw ConfigError("mu", "Bose statistics need mu < 0");
  positive("quad_tol", c.quad_tol);
  positive("gap_tol", c.gap_tol);
  positive("ks_tol", c.ks_tol);
  positive("h", c.h);
  if (!(c.ratio_min > 0.0 && c.ratio_max >= c.ratio_min)) throw ConfigError("ratio_min", "need 0 < ratio_min <= ratio_max");
  if (!(c.extent >= 0.0)) throw ConfigError("extent", "must be >= 0");
  for (std::size_t i = 0; i < c.sizes.size(); ++i) {
    if (!(c.sizes[i] > 0.0) || !std::isfinite(c.sizes[i])) throw ConfigError("sizes", "sizes must be positive");
    if (i > 0 && !(c.sizes[i] > c.sizes[i - 1])) throw ConfigError("sizes", "sizes must be strictly increasing");
  }
  if (c.disp.kind != "nonrel" && c.disp.kind != "rel" && c.disp.kind != "massless" && c.disp.kind != "table")
    throw ConfigError("dispersion", "expected nonrel, rel, massless or table");
  if ((c.disp.kind == "nonrel" || c.disp.kind == "rel")) positive("mass", c.disp.mass);
  if ((c.disp.kind == "rel" || c.disp.kind == "massless")) positive("speed", c.disp.speed);
  if (c.disp.kind == "table" && c.disp.table.empty()) throw ConfigError("table", "dispersion = table needs a table path");
  if (!std::isnan(c.a) && !std::isnan(c.b) && !(c.a <= c.b)) throw ConfigError("b", "interval needs a <= b");

  const bool sweep = c.kind == ExperimentKind::Gf || c.kind == ExperimentKind::Ldp || c.kind == ExperimentKind::Clt ||
                     c.kind == ExperimentKind::Modes || c.kind == ExperimentKind::Kac || c.kind == ExperimentKind::Kernel;
  if (sweep && c.sizes.empty()) throw ConfigError("sizes", "this experiment needs a size sweep");
  switch (c.kind) {
    case ExperimentKind::Gf:
      if (c.lambdas.empty()) throw ConfigError("lambdas", "kind = gf needs at least one tilt");
      [[fallthrough]];
    case ExperimentKind::Ldp:
    case ExperimentKind::Clt:
      if (c.disp.dimension != 1) throw ConfigError("dimension", "counting experiments run in d = 1");
      if (c.kind == ExperimentKind::Ldp && !c.has_interval()) throw ConfigError("a", "kind = ldp needs a and b");
      break;
    case ExperimentKind::Kac:
      if (c.stats != Statistics::Bose) throw ConfigError("statistics", "kind = kac needs BE");
      if (c.disp.dimension != 3) throw ConfigError("dimension", "kind = kac needs d = 3");
      if (c.samples < 2) throw ConfigError("samples", "need at least 2 samples");
      break;
    case ExperimentKind::Kernel:
      if (!std::isnan(c.window_lo) && !(c.window_lo > 0.0 && c.window_hi > c.window_lo))
        throw ConfigError("window", "need 0 < lo < hi");
      break;
    default:
      break;
  }
}

/// Parses a config text; later keys in `overrides` win.
inline ExperimentConfig parse_config(std::string_view text,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> seen;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = detail::trim(value.substr(0, hash));
    if (seen.count(key)) throw ConfigError(key, "duplicate key (line " + std::to_string(line_no) + ")");
    seen[key] = value;
  }
  for (const auto& [k, v] : overrides) seen[k] = v;
  // Apply `kind` first so error messages and defaults below see it.
  if (auto it = seen.find("kind"); it != seen.end()) apply(cfg, "kind", it->second);
  for (const auto& [k, v] : seen)
    if (k != "kind") apply(cfg, k, v);
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

/// Canonical key/value echo of every effective setting (output paths excluded).
inline std::map<std::string, std::string> echo(const ExperimentConfig& c) {
  std::map<std::string, std::string> m;
  m["kind"] = std::string(to_string(c.kind));
  m["name"] = c.stem();
  m["statistics"] = c.stats == Statistics::Bose ? "BE" : "FD";
  m["dispersion"] = c.disp.kind;
  m["dimension"] = std::to_string(c.disp.dimension);
  m["mass"] = io::num(c.disp.mass);
  m["speed"] = io::num(c.disp.speed);
  if (!c.disp.table.empty()) m["table"] = c.disp.table;
  m["beta"] = io::num(c.beta);
  m["mu"] = io::num(c.mu);
  if (!c.lambdas.empty()) m["lambdas"] = detail::render_list(c.lambdas);
  if (!std::isnan(c.a)) m["a"] = io::num(c.a);
  if (!std::isnan(c.b)) m["b"] = io::num(c.b);
  if (!c.xs.empty()) m["x"] = detail::render_list(c.xs);
  m["sizes"] = detail::render_list(c.sizes);
  m["h"] = io::num(c.h);
  m["extent"] = io::num(c.extent);
  if (!std::isnan(c.window_lo)) m["window"] = io::num(c.window_lo) + "," + io::num(c.window_hi);
  m["samples"] = std::to_string(c.samples);
  m["seed"] = std::to_string(c.seed);
  m["quad_tol"] = io::num(c.quad_tol);
  m["gap_tol"] = io::num(c.gap_tol);
  m["ratio_min"] = io::num(c.ratio_min);
  m["ratio_max"] = io::num(c.ratio_max);
  m["ks_tol"] = io::num(c.ks_tol);
  return m;
}

/// Config text reproducing `c` (the echo in file form).
inline std::string to_config_text(const ExperimentConfig& c) {
  std::string s;
  for (const auto& [k, v] : echo(c)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace qldp::harness
