#pragma once

// JSON and CSV serialization. CSV is comma separated with LF line endings; an
// optional non-numeric first line is treated as a header. Numbers are written
// with round-trip precision so identical inputs give identical bytes.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "detbound/anomaly.hpp"
#include "detbound/bounds.hpp"
#include "detbound/config.hpp"
#include "detbound/geometry.hpp"
#include "detbound/optimizer.hpp"
#include "detbound/rearrangement.hpp"
#include "detbound/spectral.hpp"

namespace detbound::io {

using json = nlohmann::ordered_json;

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json grid_meta(const GridConfig& g) {
  return json{{"T", g.T},
              {"t_nodes", g.t_nodes},
              {"theta_nodes", g.theta_nodes},
              {"stencil_pairs", g.stencil_pairs},
              {"circle_nodes", g.circle_nodes}};
}

inline GridConfig grid_from_json(const json& j, GridConfig g = {}) {
  if (j.contains("T")) g.T = j.at("T").get<double>();
  if (j.contains("t_nodes")) g.t_nodes = j.at("t_nodes").get<int>();
  if (j.contains("theta_nodes")) g.theta_nodes = j.at("theta_nodes").get<int>();
  if (j.contains("stencil_pairs")) g.stencil_pairs = j.at("stencil_pairs").get<int>();
  if (j.contains("circle_nodes")) g.circle_nodes = j.at("circle_nodes").get<int>();
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// CSV

// Rows of exactly `columns` numbers.
inline std::vector<std::vector<double>> read_csv(std::istream& in, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw std::invalid_argument("csv: line " + std::to_string(lineno) + " is not numeric");
    }
    if (row.size() != columns)
      throw std::invalid_argument("csv: line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                  " columns, expected " + std::to_string(columns));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");
  return rows;
}

inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

// Columns t,f on a uniform symmetric grid.
inline RadialProfile radial_from_csv(std::istream& in, int stencil_pairs = 4) {
  const auto rows = read_csv(in, 2);
  const auto t = column(rows, 0);
  return RadialProfile(TGrid::from_samples(t), column(rows, 1), stencil_pairs);
}

inline void write_radial_csv(std::ostream& out, const RadialProfile& f) {
  out << "t,f\n";
  for (int j = 0; j < f.size(); ++j) out << format_number(f.grid()[j]) << ',' << format_number(f[j]) << '\n';
}

// Columns s,value.
inline HalfLineFunction half_line_from_csv(std::istream& in) {
  const auto rows = read_csv(in, 2);
  return HalfLineFunction(column(rows, 0), column(rows, 1));
}

inline void write_half_line_csv(std::ostream& out, const HalfLineFunction& g) {
  out << "s,value\n";
  for (std::size_t k = 0; k < g.size(); ++k)
    out << format_number(g.grid()[k]) << ',' << format_number(g.values()[k]) << '\n';
}

// One column of samples at x_k = k / n, or two columns x,phi.
inline CircleMetric circle_from_csv(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::size_t cols = 1;
  std::stringstream probe(text);
  std::string line;
  while (std::getline(probe, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    cols += static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    break;
  }
  std::stringstream data(text);
  const auto rows = read_csv(data, cols);
  return CircleMetric(column(rows, cols - 1));
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const RadialProfile& f) {
  return json{{"t_grid", std::vector<double>(f.grid().nodes().begin(), f.grid().nodes().end())},
              {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

inline RadialProfile radial_from_json(const json& j, int stencil_pairs = 4) {
  const auto t = j.at("t_grid").get<std::vector<double>>();
  return RadialProfile(TGrid::from_samples(t), j.at("values").get<std::vector<double>>(), stencil_pairs);
}

inline json to_json(const SphereField& phi) {
  json rows = json::array();
  for (int j = 0; j < phi.t_nodes(); ++j) rows.push_back(std::vector<double>(phi.row(j).begin(), phi.row(j).end()));
  return json{{"t_grid", std::vector<double>(phi.grid().nodes().begin(), phi.grid().nodes().end())},
              {"theta_nodes", phi.theta_nodes()},
              {"values", std::move(rows)}};
}

inline SphereField sphere_from_json(const json& j, int stencil_pairs = 4) {
  const auto t = j.at("t_grid").get<std::vector<double>>();
  const int K = j.at("theta_nodes").get<int>();
  const auto& rows = j.at("values");
  if (rows.size() != t.size()) throw std::invalid_argument("field json: values must have one row per t node");
  std::vector<double> v;
  v.reserve(t.size() * K);
  for (const auto& r : rows) {
    auto row = r.get<std::vector<double>>();
    if (static_cast<int>(row.size()) != K) throw std::invalid_argument("field json: row length differs from theta_nodes");
    v.insert(v.end(), row.begin(), row.end());
  }
  return SphereField(TGrid::from_samples(t), K, std::move(v), stencil_pairs);
}

inline json to_json(const AnomalyResult& r, const GridConfig& g) {
  return json{{"n", r.n},
              {"total", r.total},
              {"energy_term", r.energy_term},
              {"linear_term", r.linear_term},
              {"h0_term", r.h0_term},
              {"h1_term", r.h1_term},
              {"grid_meta", grid_meta(g)}};
}

inline json to_json(const Lemma3Report& r) {
  return json{{"M", r.M},
              {"X", r.X},
              {"u0", r.u0},
              {"energy", r.I},
              {"N", r.N},
              {"x_points", r.x_points},
              {"coefficient", r.coefficient},
              {"bound", lemma3_bound(r.M)},
              {"excess", r.excess},
              {"calibration", r.calibration},
              {"slack", r.slack}};
}

// N,coefficient,bound,margin for N = 1..count; bound is 1/2 - 1/(70 N^2).
inline void write_coefficient_sweep(std::ostream& out, std::int64_t count) {
  if (count < 1) throw std::invalid_argument("coefficient sweep: count must be >= 1");
  out << "N,coefficient,bound,margin\n";
  for (std::int64_t N = 1; N <= count; ++N) {
    const double a = lemma3_coefficient(N);
    const double b = lemma3_bound(N);
    out << N << ',' << format_number(a) << ',' << format_number(b) << ',' << format_number(b - a) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const SearchTrace& tr) {
  out << "iter,A,energy,gradnorm\n";
  for (const auto& r : tr.rows)
    out << r.iter << ',' << format_number(r.value) << ',' << format_number(r.energy) << ','
        << format_number(r.gradnorm) << '\n';
}

inline json search_config_json(const SearchConfig& c) {
  return json{{"n", c.n},
              {"radial", c.radial},
              {"max_iters", c.max_iters},
              {"armijo", c.armijo},
              {"backtrack", c.backtrack},
              {"max_backtracks", c.max_backtracks},
              {"initial_step", c.initial_step},
              {"mass", c.mass},
              {"energy_cap", c.energy_cap},
              {"plateau_tol", c.plateau_tol},
              {"plateau_window", c.plateau_window},
              {"grad_tol", c.grad_tol},
              {"seed", c.seed},
              {"restarts", c.restarts},
              {"init_amplitude", c.init_amplitude},
              {"general_theta_nodes", c.general_theta_nodes}};
}

inline json search_summary(const SearchConfig& cfg, const SearchResult& res) {
  json traces = json::array();
  for (const auto& t : res.traces)
    traces.push_back(json{{"restart", t.restart},
                          {"seed", t.seed},
                          {"status", to_string(t.status)},
                          {"iterations", t.rows.back().iter},
                          {"best_A", t.best_value()},
                          {"energy", t.rows.back().energy}});
  const auto& b = res.best();
  return json{{"config", search_config_json(cfg)},
              {"best_restart", b.restart},
              {"best_seed", b.seed},
              {"best_A", b.best_value()},
              {"best_energy", b.rows.back().energy},
              {"best_status", to_string(b.status)},
              {"traces", std::move(traces)},
              {"grid_meta", grid_meta(cfg.grid)}};
}

}  // namespace detbound::io
