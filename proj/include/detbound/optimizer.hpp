#pragma once

// Search for sup A(phi) over mean-zero perturbations.
//
// Preconditioned projected ascent: the step direction solves P d = grad A
// with P = (Hessian of the Dirichlet part) + mass * diag(mu), i.e. an H^1
// gradient, then is projected onto int d mu = 0. Armijo backtracking keeps
// accepted values nondecreasing. Restarts run concurrently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "detbound/anomaly.hpp"
#include "detbound/config.hpp"
#include "detbound/errors.hpp"
#include "detbound/geometry.hpp"
#include "detbound/numerics.hpp"

namespace detbound {

// ---------------------------------------------------------------------------
// Probe profiles

// x in [0, 1] along the sphere, x = (1 + x3) / 2.
inline double sphere_height(double t) { return 0.5 * (1.0 + std::tanh(0.5 * t)); }

namespace detail {

inline double param_or(std::span<const double> p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}

}  // namespace detail

// Named probe families:
//   zero
//   tanh       a              a tanh(t/2)
//   bump       h [c=0 w=1]    h exp(-(t-c)^2 / (2 w^2))
//   tent       h w [c=0]      h max(0, 1 - |t-c|/w), int f'^2 = 2 h^2 / w
//   fourier    c1 ... cK      sum_j c_j cos(j pi x)
//   conformal  s              log(rho(t-s) / rho(t)), a Moebius pull-back
inline RadialProfile profile_family(std::string_view name, std::span<const double> params, const TGrid& grid,
                                    int stencil_pairs = 4) {
  using detail::param_or;
  auto need = [&](std::size_t k) {
    if (params.size() < k)
      throw std::invalid_argument("profile_family: '" + std::string(name) + "' needs " + std::to_string(k) +
                                  " parameter(s)");
  };
  if (name == "zero") return RadialProfile::sample(grid, [](double) { return 0.0; }, stencil_pairs);
  if (name == "tanh") {
    need(1);
    const double a = params[0];
    return RadialProfile::sample(grid, [a](double t) { return a * std::tanh(0.5 * t); }, stencil_pairs);
  }
  if (name == "bump") {
    need(1);
    const double h = params[0], c = param_or(params, 1, 0.0), w = param_or(params, 2, 1.0);
    if (!(w > 0.0)) throw std::invalid_argument("profile_family: bump width must be positive");
    return RadialProfile::sample(
        grid, [=](double t) { return h * std::exp(-(t - c) * (t - c) / (2.0 * w * w)); }, stencil_pairs);
  }
  if (name == "tent") {
    need(2);
    const double h = params[0], w = params[1], c = param_or(params, 2, 0.0);
    if (!(w > 0.0)) throw std::invalid_argument("profile_family: tent width must be positive");
    return RadialProfile::sample(
        grid, [=](double t) { return h * std::max(0.0, 1.0 - std::abs(t - c) / w); }, stencil_pairs);
  }
  if (name == "fourier") {
    need(1);
    std::vector<double> c(params.begin(), params.end());
    return RadialProfile::sample(
        grid,
        [&](double t) {
          const double x = sphere_height(t);
          double s = 0.0;
          for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * std::cos(double(j + 1) * numerics::pi * x);
          return s;
        },
        stencil_pairs);
  }
  if (name == "conformal") {
    need(1);
    const double s = params[0];
    // log rho(t) = t - 2 log(1 + e^t)
    auto log_rho = [](double t) { return t - 2.0 * numerics::softplus(t); };
    return RadialProfile::sample(grid, [=](double t) { return log_rho(t - s) - log_rho(t); }, stencil_pairs);
  }
  throw std::invalid_argument("profile_family: unknown family '" + std::string(name) + "'");
}

inline RadialProfile profile_family(std::string_view name, std::span<const double> params) {
  return profile_family(name, params, TGrid(GridConfig{}));
}

// ---------------------------------------------------------------------------
// Search

struct SearchConfig {
  int n = 0;
  bool radial = true;
  int max_iters = 400;
  double armijo = 1e-4;           // sufficient-increase constant
  double backtrack = 0.5;         // step shrink factor
  int max_backtracks = 40;
  double initial_step = 1.0;
  double mass = 1.0;              // zeroth-order weight in the preconditioner
  double energy_cap = 50.0;       // int f'^2 (radial) or D / 4pi (general)
  double plateau_tol = 1e-11;     // total gain over `plateau_window` accepted steps
  int plateau_window = 10;
  double grad_tol = 1e-9;         // preconditioned gradient norm
  std::uint64_t seed = 1;
  int restarts = 1;
  double init_amplitude = 1.0;
  double shift = 0.0;             // constant added to every iterate before evaluation
  GridConfig grid{};
  int general_theta_nodes = 16;   // angular resolution when radial = false

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("search: max_iters must be >= 1");
    if (!(energy_cap > 0.0)) throw std::invalid_argument("search: energy cap must be positive");
    if (restarts < 1) throw std::invalid_argument("search: restarts must be >= 1");
    if (!(armijo > 0.0 && armijo < 0.5)) throw std::invalid_argument("search: armijo constant must lie in (0, 1/2)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("search: backtrack factor must lie in (0, 1)");
    if (!(initial_step > 0.0) || !(mass > 0.0)) throw std::invalid_argument("search: step and mass must be positive");
    if (plateau_window < 1) throw std::invalid_argument("search: plateau window must be >= 1");
    if (std::abs(n) > default_max_degree) throw std::invalid_argument("search: |n| outside the implemented range");
    if (!radial && (general_theta_nodes < 4 || general_theta_nodes % 2 != 0))
      throw std::invalid_argument("search: general_theta_nodes must be even and >= 4");
    grid.validate();
  }
};

enum class SearchStatus { plateaued, hit_cap, max_iters };

inline const char* to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::plateaued: return "plateaued";
    case SearchStatus::hit_cap: return "hit-cap";
    case SearchStatus::max_iters: return "max-iters";
  }
  return "?";
}

struct TraceRow {
  int iter = 0;
  double value = 0.0;
  double energy = 0.0;
  double gradnorm = 0.0;
};

struct SearchTrace {
  int restart = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;   // initial point and every accepted step
  std::vector<double> best;     // best iterate (mean-zero), radial or [t][theta]
  int theta_nodes = 1;          // 1 for radial traces
  SearchStatus status = SearchStatus::max_iters;

  double best_value() const { return rows.back().value; }
};

struct SearchResult {
  std::vector<SearchTrace> traces;
  std::size_t best_index = 0;

  const SearchTrace& best() const { return traces[best_index]; }
};

// Anomaly evaluation failed at an iterate the search itself produced.
class SearchError : public DomainError {
 public:
  SearchError(const std::string& what, std::vector<double> iterate)
      : DomainError(what), iterate_(std::move(iterate)) {}
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  std::vector<double> iterate_;
};

namespace detail {

// Objective on either a radial profile or a field on the product grid.
class SearchObjective {
 public:
  SearchObjective(const SearchConfig& cfg)
      : cfg_(cfg), grid_(cfg.grid), K_(cfg.radial ? 1 : cfg.general_theta_nodes), mu_(mu_weights(grid_)) {
    const int nt = grid_.size();
    const numerics::EnergyForm form(cfg.grid.stencil_pairs, grid_.step());
    std::vector<Eigen::Triplet<double>> trip;
    form.hessian_half(nt, [&](std::size_t r, std::size_t c, double v) {
      trip.emplace_back(int(r), int(c), v / K_);
    });
    for (int j = 0; j < nt; ++j) trip.emplace_back(j, j, cfg.mass * mu_[j] / K_);
    Eigen::SparseMatrix<double> P(nt, nt);
    P.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(P);
    if (solver_.info() != Eigen::Success) throw DomainError("search: preconditioner factorization failed");
  }

  int size() const { return grid_.size() * K_; }
  int theta_nodes() const { return K_; }
  const TGrid& grid() const { return grid_; }

  struct Eval {
    double value;
    double energy;
    std::vector<double> gradient;  // Euclidean
  };

  Eval operator()(std::span<const double> x, bool want_gradient) const {
    std::vector<double> v(x.begin(), x.end());
    for (double& y : v) y += cfg_.shift;
    if (cfg_.radial) {
      const RadialProfile f(grid_, std::move(v), cfg_.grid.stencil_pairs);
      auto ev = evaluate_radial(f, cfg_.n, want_gradient);
      return {ev.result.total, radial_energy(f), std::move(ev.gradient)};
    }
    const SphereField phi(grid_, K_, std::move(v), cfg_.grid.stencil_pairs);
    auto ev = evaluate_general(phi, cfg_.n, want_gradient);
    return {ev.result.total, dirichlet_integral(phi) / (4.0 * numerics::pi), std::move(ev.gradient)};
  }

  // mean against mu
  double mean(std::span<const double> x) const {
    double s = 0.0;
    for (int j = 0; j < grid_.size(); ++j)
      for (int k = 0; k < K_; ++k) s += mu_[j] * x[std::size_t(j) * K_ + k];
    return s / K_;
  }

  // P^{-1} g per theta column, then projected to mean zero.
  std::vector<double> direction(std::span<const double> g) const {
    const int nt = grid_.size();
    std::vector<double> d(g.size());
    Eigen::VectorXd col(nt);
    for (int k = 0; k < K_; ++k) {
      for (int j = 0; j < nt; ++j) col[j] = g[std::size_t(j) * K_ + k];
      const Eigen::VectorXd s = solver_.solve(col);
      for (int j = 0; j < nt; ++j) d[std::size_t(j) * K_ + k] = s[j];
    }
    const double m = mean(d);
    for (double& y : d) y -= m;
    return d;
  }

 private:
  const SearchConfig& cfg_;
  TGrid grid_;
  int K_;
  std::vector<double> mu_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

// Random smooth starting point: a few Fourier-in-x modes plus a bump.
inline std::vector<double> random_start(const SearchConfig& cfg, const TGrid& grid, int K, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coeff(4);
  for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] = cfg.init_amplitude * 0.5 * normal(rng) / double(j + 1);
  const double h = cfg.init_amplitude * (2.0 * unit(rng) - 1.0);
  const double c = 6.0 * (2.0 * unit(rng) - 1.0);
  const double w = 0.5 + 2.0 * unit(rng);
  const auto fourier = profile_family("fourier", coeff, grid);
  const double bump_params[] = {h, c, w};
  const auto bump = profile_family("bump", bump_params, grid);
  // angular part only for the general search
  double ang_a = 0.0, ang_b = 0.0;
  if (K > 1) {
    ang_a = 0.3 * cfg.init_amplitude * normal(rng);
    ang_b = 0.3 * cfg.init_amplitude * normal(rng);
  }
  std::vector<double> x(std::size_t(grid.size()) * K);
  for (int j = 0; j < grid.size(); ++j) {
    const double envelope = 1.0 / std::cosh(0.5 * grid[j]);
    for (int k = 0; k < K; ++k) {
      const double th = SphereField::theta(k, K);
      x[std::size_t(j) * K + k] =
          fourier[j] + bump[j] + envelope * (ang_a * std::cos(th) + ang_b * std::sin(th));
    }
  }
  return x;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// One ascent from a given starting point.
inline SearchTrace run_trace(const SearchConfig& cfg, std::vector<double> x, int restart = 0,
                             std::uint64_t trace_seed = 0) {
  cfg.validate();
  const detail::SearchObjective obj(cfg);
  if (static_cast<int>(x.size()) != obj.size()) throw std::invalid_argument("search: starting point has wrong size");
  {
    const double m = obj.mean(x);
    for (double& y : x) y -= m;
  }
  SearchTrace tr;
  tr.restart = restart;
  tr.seed = trace_seed;
  tr.theta_nodes = obj.theta_nodes();

  detail::SearchObjective::Eval cur;
  try {
    cur = obj(x, true);
  } catch (const DomainError& e) {
    throw SearchError(std::string("search: initial iterate rejected: ") + e.what(), x);
  }
  auto d = obj.direction(cur.gradient);
  double slope = detail::dot(cur.gradient, d);
  tr.rows.push_back({0, cur.value, cur.energy, std::sqrt(std::max(slope, 0.0))});
  if (cur.energy > cfg.energy_cap) {
    tr.status = SearchStatus::hit_cap;
    tr.best = x;
    return tr;
  }

  double step = cfg.initial_step;
  tr.status = SearchStatus::max_iters;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (std::sqrt(std::max(slope, 0.0)) < cfg.grad_tol) {
      tr.status = SearchStatus::plateaued;
      break;
    }
    bool accepted = false;
    bool capped = false;
    std::vector<double> trial(x.size());
    detail::SearchObjective::Eval next;
    for (int b = 0; b <= cfg.max_backtracks; ++b) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * d[i];
      bool ok = true;
      try {
        next = obj(trial, false);
      } catch (const DomainError&) {
        ok = false;
      }
      if (ok && next.value >= cur.value + cfg.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      tr.status = SearchStatus::plateaued;
      break;
    }
    if (next.energy > cfg.energy_cap) {
      capped = true;
    }
    if (capped) {
      tr.status = SearchStatus::hit_cap;
      break;
    }
    {
      const double m = obj.mean(trial);
      for (double& y : trial) y -= m;
    }
    x.swap(trial);
    try {
      cur = obj(x, true);
    } catch (const DomainError& e) {
      throw SearchError(std::string("search: evaluation failed at an accepted iterate: ") + e.what(), x);
    }
    d = obj.direction(cur.gradient);
    slope = detail::dot(cur.gradient, d);
    tr.rows.push_back({it, cur.value, cur.energy, std::sqrt(std::max(slope, 0.0))});
    step = std::min(cfg.initial_step, step / cfg.backtrack);

    const int w = cfg.plateau_window;
    if (static_cast<int>(tr.rows.size()) > w) {
      const double gain = tr.rows.back().value - tr.rows[tr.rows.size() - 1 - w].value;
      if (gain < cfg.plateau_tol * std::max(1.0, std::abs(cur.value))) {
        tr.status = SearchStatus::plateaued;
        break;
      }
    }
  }
  tr.best = std::move(x);
  return tr;
}

inline std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  std::seed_seq seq{std::uint32_t(seed & 0xffffffffu), std::uint32_t(seed >> 32), std::uint32_t(restart)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

// All restarts, each from a seeded random probe.
inline SearchResult search_sup(const SearchConfig& cfg) {
  cfg.validate();
  const TGrid grid(cfg.grid);
  const int K = cfg.radial ? 1 : cfg.general_theta_nodes;
  std::vector<std::future<SearchTrace>> jobs;
  jobs.reserve(cfg.restarts);
  for (int r = 0; r < cfg.restarts; ++r) {
    jobs.push_back(std::async(std::launch::async, [&cfg, &grid, K, r] {
      const std::uint64_t s = restart_seed(cfg.seed, r);
      std::mt19937_64 rng(s);
      return run_trace(cfg, detail::random_start(cfg, grid, K, rng), r, s);
    }));
  }
  SearchResult out;
  out.traces.reserve(cfg.restarts);
  for (auto& j : jobs) out.traces.push_back(j.get());
  for (std::size_t i = 1; i < out.traces.size(); ++i) {
    const auto& a = out.traces[i];
    const auto& b = out.traces[out.best_index];
    if (a.best_value() > b.best_value() || (a.best_value() == b.best_value() && a.seed < b.seed)) out.best_index = i;
  }
  return out;
}

}  // namespace detbound
