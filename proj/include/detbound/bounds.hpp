#pragma once

// Quantitative inequality checks: the half-line exponential-sum estimate with
// its explicit constants, the square-root modulus of continuity from the
// energy, and the exponential integrability functionals on the round sphere.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "detbound/errors.hpp"
#include "detbound/geometry.hpp"
#include "detbound/numerics.hpp"
#include "detbound/rearrangement.hpp"

namespace detbound {

// lambda_k = 1 + 1/(5k^2), mu_k = 1 - 1/(4k), r_k = k + 1 - lambda_k k - mu_k.
// Scalar may be double or an exact rational type.
template <class Scalar = double>
struct Lemma3Constants {
  std::int64_t k;
  Scalar lambda;
  Scalar mu;
  Scalar r;

  static Lemma3Constants of(std::int64_t k) {
    if (k < 1) throw std::invalid_argument("Lemma3Constants: k must be >= 1");
    const Scalar one(1);
    const Scalar kk(k);
    Lemma3Constants c{k, one + one / (Scalar(5) * kk * kk), one - one / (Scalar(4) * kk), Scalar(0)};
    c.r = kk + one - c.lambda * kk - c.mu;
    return c;
  }

  // lambda_k k + mu_k
  Scalar level() const { return lambda * Scalar(k) + mu; }
};

// A(lambda, mu) = 1/(2 lambda) + (1 - mu/lambda)^2 / (4 (mu - mu^2/(2 lambda))) at lambda_N, mu_N.
inline double lemma3_coefficient(std::int64_t N) {
  if (N < 1) throw std::invalid_argument("lemma3_coefficient: N must be >= 1");
  const auto c = Lemma3Constants<double>::of(N);
  const double l = c.lambda, m = c.mu;
  const double q = 1.0 - m / l;
  return 1.0 / (2.0 * l) + q * q / (4.0 * (m - m * m / (2.0 * l)));
}

// (1/2 - 1/(70 N^2)) - A(lambda_N, mu_N), evaluated without cancelling O(1)
// terms: with e = lambda - 1 and d = 1 - mu,
//   1/2 - A = (e mu (2 lambda - mu) - (e + d)^2) / (2 lambda mu (2 lambda - mu)).
inline double lemma3_margin(std::int64_t N) {
  if (N < 1) throw std::invalid_argument("lemma3_margin: N must be >= 1");
  const long double n = static_cast<long double>(N);
  const long double e = 1.0L / (5.0L * n * n);
  const long double d = 1.0L / (4.0L * n);
  const long double l = 1.0L + e;
  const long double m = 1.0L - d;
  const long double half_minus_a = (e * m * (2.0L * l - m) - (e + d) * (e + d)) / (2.0L * l * m * (2.0L * l - m));
  return static_cast<double>(half_minus_a - 1.0L / (70.0L * n * n));
}

inline double lemma3_bound(std::int64_t M) {
  const double m = static_cast<double>(M);
  return 0.5 - 1.0 / (70.0 * m * m);
}

// Smallest N >= 0 with udot0 <= lambda_{N+1} (N+1) + mu_{N+1}.
inline std::int64_t lemma3_threshold(double udot0) {
  if (!std::isfinite(udot0)) throw std::invalid_argument("lemma3_threshold: u'(0) must be finite");
  if (udot0 > 1e15) throw std::invalid_argument("lemma3_threshold: u'(0) too large");
  // level(k) = k + 1 - 1/(20k) lies in [k + 0.95, k + 1), so N >= ceil(udot0) - 3
  std::int64_t N = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(udot0)) - 3);
  while (udot0 > Lemma3Constants<double>::of(N + 1).level()) ++N;
  return N;
}

namespace detail {

inline void require_admissible(const HalfLineFunction& u) {
  const auto sl = u.cell_slopes();
  double scale = 1.0;
  for (double s : sl) scale = std::max(scale, std::abs(s));
  for (std::size_t k = 1; k < sl.size(); ++k)
    if (sl[k] > sl[k - 1] + 1e-10 * scale)
      throw std::invalid_argument("lemma3: u' must be nonincreasing (violated at cell " + std::to_string(k) + ")");
}

// log int_0^inf exp(u(t) - rate t) dt for piecewise-linear u continued past the
// window with its last slope.
inline double log_exp_integral(const HalfLineFunction& u, double rate, int j) {
  const auto s = u.grid();
  const auto v = u.values();
  const auto sl = u.cell_slopes();
  const double tail_rate = rate - sl.back();
  if (!(tail_rate > 0.0))
    throw DivergenceError("lemma3_lhs: summand j = " + std::to_string(j) + " diverges (u'(inf) = " +
                          std::to_string(sl.back()) + " >= " + std::to_string(rate) + ")");
  std::vector<double> logs;
  logs.reserve(sl.size() + 1);
  for (std::size_t k = 0; k < sl.size(); ++k) {
    const double h = u.width(k);
    logs.push_back(v[k] - rate * s[k] + std::log(h * numerics::expm1_ratio((sl[k] - rate) * h)));
  }
  logs.push_back(v.back() - rate * s.back() - std::log(tail_rate));
  const double peak = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - peak);
  return peak + std::log(acc);
}

}  // namespace detail

// X = sum_{j=0}^{M} log int_0^inf exp(u(t) - (j+1) t) dt.
inline double lemma3_lhs(const HalfLineFunction& u, std::int64_t M) {
  if (M < 1) throw std::invalid_argument("lemma3_lhs: M must be >= 1");
  detail::require_admissible(u);
  double X = 0.0;
  for (std::int64_t j = 0; j <= M; ++j) X += detail::log_exp_integral(u, double(j + 1), static_cast<int>(j));
  return X;
}

// Points x_0 >= ... >= x_{N-1} with u'(x_j) = lambda_N j + mu_N, by bisection on
// the nonincreasing callable udot over [0, t_max].
template <class DerivFn>
std::vector<double> crossing_points(DerivFn&& udot, double t_max, std::int64_t N, double tol = 1e-12) {
  if (N < 1) throw std::invalid_argument("crossing_points: N must be >= 1");
  const auto c = Lemma3Constants<double>::of(N);
  std::vector<double> x(static_cast<std::size_t>(N));
  const double top = udot(0.0);
  const double bottom = udot(t_max);
  for (std::int64_t j = 0; j < N; ++j) {
    const double level = c.lambda * double(j) + c.mu;
    if (!(top > level))
      throw std::invalid_argument("crossing_points: u'(0) = " + std::to_string(top) + " does not exceed level " +
                                  std::to_string(level));
    if (!(bottom < level))
      throw WindowError("crossing_points: level " + std::to_string(level) + " (j = " + std::to_string(j) +
                        ") not crossed on [0, " + std::to_string(t_max) + "]");
    double lo = 0.0, hi = t_max;  // udot(lo) > level >= udot(hi)
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (udot(mid) > level)
        lo = mid;
      else
        hi = mid;
    }
    x[static_cast<std::size_t>(j)] = 0.5 * (lo + hi);
  }
  return x;
}

inline std::vector<double> crossing_points(const HalfLineFunction& u, std::int64_t N, double tol = 1e-12) {
  return crossing_points([&](double t) { return u.slope_at(t); }, u.length(), N, tol);
}

struct Lemma3Report {
  std::int64_t M = 1;
  double X = 0.0;
  double u0 = 0.0;
  double I = 0.0;                 // int u'^2
  std::int64_t N = 0;             // threshold index
  std::vector<double> x_points;   // crossings, empty when N = 0
  double coefficient = 0.0;       // 3/8 if N = 0, else A(lambda_N', mu_N') with N' = min(N, M)
  double excess = 0.0;            // X - (M+1)|u0| - (1/2 - 1/(70 M^2)) I
  double calibration = 0.0;       // C
  double slack = 0.0;             // rhs - X = C - excess
};

inline Lemma3Report lemma3_report(const HalfLineFunction& u, std::int64_t M, double C = 0.0) {
  Lemma3Report r;
  r.M = M;
  r.X = lemma3_lhs(u, M);
  r.u0 = u.values()[0];
  r.I = slope_energy(u);
  r.N = lemma3_threshold(u.slope_at(0.0));
  if (r.N >= 1) {
    r.x_points = crossing_points(u, r.N);
    r.coefficient = lemma3_coefficient(std::min(r.N, M));
  } else {
    r.coefficient = 3.0 / 8.0;
  }
  r.excess = r.X - double(M + 1) * std::abs(r.u0) - lemma3_bound(M) * r.I;
  r.calibration = C;
  r.slack = C - r.excess;
  return r;
}

// Stationary profile of  X - (M+1)|u(0)| - (1/2 - 1/(70 M^2)) int u'^2  with
// u(0) = 0, from the fixed point
//   u'(t) = (1 / 2 kappa) sum_j P_j(T > t),  P_j(dt) ~ exp(u(t) - (j+1) t) dt,
// iterated with damping on a uniform grid of [0, length].
inline HalfLineFunction lemma3_extremal(std::int64_t M, double length = 30.0, int nodes = 2001,
                                        double tol = 1e-12, int max_iters = 20000) {
  if (M < 1) throw std::invalid_argument("lemma3_extremal: M must be >= 1");
  if (nodes < 16 || !(length > 0.0)) throw std::invalid_argument("lemma3_extremal: bad grid");
  const double kappa = lemma3_bound(M);
  const double h = length / (nodes - 1);
  std::vector<double> s(nodes), d(nodes), u(nodes), next(nodes), w(nodes), tail(nodes);
  for (int k = 0; k < nodes; ++k) {
    s[k] = h * k;
    d[k] = double(M + 1) / (2.0 * kappa) * std::exp(-s[k]);
  }
  auto integrate = [&] {
    u[0] = 0.0;
    for (int k = 1; k < nodes; ++k) u[k] = u[k - 1] + 0.5 * h * (d[k] + d[k - 1]);
  };
  bool converged = false;
  for (int it = 0; it < max_iters && !converged; ++it) {
    integrate();
    std::fill(next.begin(), next.end(), 0.0);
    for (std::int64_t j = 0; j <= M; ++j) {
      double peak = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < nodes; ++k) peak = std::max(peak, w[k] = u[k] - double(j + 1) * s[k]);
      for (double& x : w) x = std::exp(x - peak);
      tail[nodes - 1] = 0.0;
      for (int k = nodes - 2; k >= 0; --k) tail[k] = tail[k + 1] + 0.5 * h * (w[k] + w[k + 1]);
      for (int k = 0; k < nodes; ++k) next[k] += tail[k] / (tail[0] * 2.0 * kappa);
    }
    double change = 0.0;
    for (int k = 0; k < nodes; ++k) {
      change = std::max(change, std::abs(next[k] - d[k]));
      d[k] = 0.5 * (d[k] + next[k]);
    }
    converged = change < tol;
  }
  if (!converged) throw DomainError("lemma3_extremal: fixed-point iteration did not converge");
  integrate();
  return HalfLineFunction(std::move(s), std::move(u), std::move(d));
}

// Calibration constant C for the inequality: the excess at the extremal.
inline double lemma3_calibration(std::int64_t M, double length = 30.0, int nodes = 2001) {
  return lemma3_report(lemma3_extremal(M, length, nodes), M).excess;
}

// max over node pairs of |f(t) - f(s)| / (A sqrt|t - s|), A^2 = int f'^2 of the
// piecewise-linear interpolant (for which the bound <= 1 is exact).
inline double holder_bound_check(const RadialProfile& f) {
  const double A2 = cell_energy(f);
  const auto v = f.values();
  const auto t = f.grid().nodes();
  double spread = 0.0;
  for (double x : v) spread = std::max(spread, std::abs(x - v[0]));
  if (!(A2 > 0.0)) {
    if (spread > 0.0) throw DomainError("holder_bound_check: zero energy for a nonconstant profile");
    return 0.0;
  }
  const double A = std::sqrt(A2);
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      worst = std::max(worst, std::abs(v[j] - v[i]) / (A * std::sqrt(t[j] - t[i])));
  return worst;
}

namespace detail {

// log int exp(g) mu with a check that the edge rows carry negligible mass.
inline double log_mu_integral_exp(const SphereField& phi, std::span<const double> exponent, const char* who,
                                  double tail_tol = 1e-8) {
  const int nt = phi.t_nodes();
  const int K = phi.theta_nodes();
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : exponent) peak = std::max(peak, x);
  double total = 0.0, edge = 0.0;
  for (int j = 0; j < nt; ++j) {
    double row = 0.0;
    for (int k = 0; k < K; ++k) row += std::exp(exponent[phi.index(j, k)] - peak);
    row *= phi.mu_t()[j] / K;
    total += row;
    if (j == 0 || j == nt - 1) edge += row;
  }
  if (!(total > 0.0) || !std::isfinite(total) || edge > tail_tol * total)
    throw DivergenceError(std::string(who) + ": integral does not converge on the window (tail mass fraction " +
                          std::to_string(edge / total) + ")");
  return peak + std::log(total);
}

}  // namespace detail

// log int e^g mu - (1/16 pi) int |grad g|^2 mu for mean-zero g. The sharp
// bound on the round sphere is 0.
inline double mt_deficit(const SphereField& g) {
  const SphereField h = mean_normalize(g);
  return detail::log_mu_integral_exp(h, h.values(), "mt_deficit") - dirichlet_integral(h) / (16.0 * numerics::pi);
}

struct FontanaResult {
  double value = 0.0;         // log int exp(4 pi f^2) mu after normalization
  double removed_mean = 0.0;  // subtracted from the input
  double scale = 1.0;         // multiplied into the input (1 if energy <= 1)
  double energy = 0.0;        // int |grad f|^2 mu after normalization
};

// log int exp(4 pi f^2) mu, after forcing mean zero and energy <= 1.
inline FontanaResult fontana_functional(const SphereField& f) {
  FontanaResult r;
  r.removed_mean = mean(f);
  SphereField h = mean_normalize(f);
  const double D = dirichlet_integral(h);
  if (D > 1.0) {
    r.scale = 1.0 / std::sqrt(D);
    std::vector<double> v(h.values().begin(), h.values().end());
    for (double& x : v) x *= r.scale;
    h = h.with_values(std::move(v));
  }
  r.energy = D * r.scale * r.scale;
  std::vector<double> ex(h.values().size());
  for (std::size_t i = 0; i < ex.size(); ++i) ex[i] = 4.0 * numerics::pi * h.values()[i] * h.values()[i];
  r.value = detail::log_mu_integral_exp(h, ex, "fontana_functional");
  return r;
}

}  // namespace detbound
