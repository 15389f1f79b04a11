// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file record.hpp
 * @brief Experiment records and their CSV / JSON forms.
 *
 * The JSON payload is a pure function of the record: keys are sorted, doubles
 * are printed shortest-round-trip, and non-finite values become the strings
 * "inf", "-inf", "nan". Wall-clock timings live in a separate file so the
 * payload stays byte-stable across runs.
 */

#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qldp/core.hpp"
#include "qldp/harness/config.hpp"
#include "qldp/io.hpp"

namespace qldp::harness {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< how value is compared with threshold, e.g. "<", "in [lo,hi]"
};

struct Column {
  std::string name;
  std::string doc;
};

struct ExperimentRecord {
  std::string kind;
  std::map<std::string, std::string> config;
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> targets;
  std::map<std::string, double> summary;
  std::vector<Check> checks;
  bool complete = true;
  std::string failure;          ///< set when the sweep stopped early
  std::vector<double> timings;  ///< seconds per row; not part of the payload

  bool passed() const {
    if (!complete) return false;
    for (const Check& c : checks)
      if (!c.passed) return false;
    return true;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    throw Error("record has no column '" + name + "'");
  }
};

/// Field-by-field equality where NaN equals NaN.
inline bool same_payload(const ExperimentRecord& x, const ExperimentRecord& y) {
  auto eq = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  if (x.kind != y.kind || x.config != y.config || x.complete != y.complete || x.failure != y.failure) return false;
  if (x.columns.size() != y.columns.size() || x.rows.size() != y.rows.size() || x.checks.size() != y.checks.size())
    return false;
  for (std::size_t i = 0; i < x.columns.size(); ++i)
    if (x.columns[i].name != y.columns[i].name || x.columns[i].doc != y.columns[i].doc) return false;
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    if (x.rows[i].size() != y.rows[i].size()) return false;
    for (std::size_t j = 0; j < x.rows[i].size(); ++j)
      if (!eq(x.rows[i][j], y.rows[i][j])) return false;
  }
  auto same_map = [&](const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
      if (ia->first != ib->first || !eq(ia->second, ib->second)) return false;
    return true;
  };
  if (!same_map(x.targets, y.targets) || !same_map(x.summary, y.summary)) return false;
  for (std::size_t i = 0; i < x.checks.size(); ++i) {
    const Check &a = x.checks[i], &b = y.checks[i];
    if (a.name != b.name || a.passed != b.passed || !eq(a.value, b.value) || !eq(a.threshold, b.threshold) ||
        a.relation != b.relation)
      return false;
  }
  return true;
}

// ============================================================================
// JSON
// ============================================================================

namespace detail {

inline nlohmann::json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error("unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentRecord& r) {
  using nlohmann::json;
  json j;
  j["kind"] = r.kind;
  j["config"] = r.config;
  json cols = json::array();
  for (const Column& c : r.columns) cols.push_back({{"name", c.name}, {"doc", c.doc}});
  j["columns"] = cols;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr = json::array();
    for (double v : row) jr.push_back(detail::number(v));
    rows.push_back(jr);
  }
  j["results"] = rows;
  json targets = json::object(), summary = json::object();
  for (const auto& [k, v] : r.targets) targets[k] = detail::number(v);
  for (const auto& [k, v] : r.summary) summary[k] = detail::number(v);
  j["targets"] = targets;
  j["summary"] = summary;
  json checks = json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", detail::number(c.value)},
                      {"threshold", detail::number(c.threshold)},
                      {"relation", c.relation}});
  j["checks"] = checks;
  j["complete"] = r.complete;
  j["failure"] = r.failure;
  j["passed"] = r.passed();
  return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord r;
  r.kind = j.at("kind").get<std::string>();
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  for (const auto& c : j.at("columns")) r.columns.push_back({c.at("name").get<std::string>(), c.at("doc").get<std::string>()});
  for (const auto& row : j.at("results")) {
    std::vector<double> v;
    for (const auto& x : row) v.push_back(detail::number(x));
    r.rows.push_back(std::move(v));
  }
  for (const auto& [k, v] : j.at("targets").items()) r.targets[k] = detail::number(v);
  for (const auto& [k, v] : j.at("summary").items()) r.summary[k] = detail::number(v);
  for (const auto& c : j.at("checks"))
    r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), detail::number(c.at("value")),
                        detail::number(c.at("threshold")), c.at("relation").get<std::string>()});
  r.complete = j.at("complete").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  return r;
}

/// Byte-stable JSON text of the payload.
inline std::string record_json(const ExperimentRecord& r) { return to_json(r).dump(2) + "\n"; }

inline std::string timings_json(const ExperimentRecord& r) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["row_seconds"] = r.timings;
  double total = 0.0;
  for (double t : r.timings) total += t;
  j["total_seconds"] = total;
  return j.dump(2) + "\n";
}

// ============================================================================
// CSV
// ============================================================================

inline std::string record_csv(const ExperimentRecord& r) {
  std::string out = "# " + r.kind + " experiment\n";
  for (const auto& [k, v] : r.config) out += "# config " + k + " = " + v + "\n";
  for (const auto& [k, v] : r.targets) out += "# target " + k + " = " + io::num(v) + "\n";
  if (!r.complete) out += "# INCOMPLETE: " + r.failure + "\n";
  out += "# columns:\n";
  for (const Column& c : r.columns) out += "#   " + c.name + ": " + c.doc + "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) out += (i ? "," : "") + r.columns[i].name;
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + io::num(row[i]);
    out += "\n";
  }
  return out;
}

/// Output paths for one record.
struct EmittedFiles {
  std::filesystem::path csv, json, timings;
};

/// Writes the record under `dir` with file stem `stem`; every file is written
/// to a temporary sibling first and renamed into place.
inline EmittedFiles emit(const ExperimentRecord& r, const std::filesystem::path& dir, const std::string& stem,
                         OutputFormat format) {
  EmittedFiles f;
  if (format != OutputFormat::Json) {
    f.csv = dir / (stem + ".csv");
    io::atomic_write(f.csv, record_csv(r));
  }
  if (format != OutputFormat::Csv) {
    f.json = dir / (stem + ".json");
    io::atomic_write(f.json, record_json(r));
  }
  f.timings = dir / (stem + ".timings.json");
  io::atomic_write(f.timings, timings_json(r));
  return f;
}

}  // namespace qldp::harness
