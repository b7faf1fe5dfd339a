#pragma once

// Trivial line bundle on the circle of length one with metric h(1,1) = e^phi.
// The Laplacian is  Delta_phi s = -e^{-phi} (e^phi s')'.
//
// det'(Delta_phi) is computed without the spectrum: with M(lambda) the
// monodromy of  s' = e^{-phi} p,  p' = -lambda e^phi s  over one period,
// det_zeta(Delta_phi - lambda) is proportional to F(lambda) = 2 - tr M(lambda),
// and det' = F'(0) times the proportionality constant, calibrated once at
// phi = 0 where det'(Delta_0) = 1 exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "detbound/errors.hpp"
#include "detbound/numerics.hpp"

namespace detbound {

class CircleMetric {
 public:
  explicit CircleMetric(std::vector<double> samples) : phi_(std::move(samples)) {
    const std::size_t n = phi_.size();
    if (n < 64 || (n & (n - 1)) != 0)
      throw std::invalid_argument("CircleMetric: sample count must be a power of two >= 64");
    for (double v : phi_)
      if (!std::isfinite(v)) throw std::invalid_argument("CircleMetric: non-finite sample");
  }

  // fn(x) on x_k = k / nodes.
  template <class Fn>
  static CircleMetric sample(int nodes, Fn&& fn) {
    std::vector<double> v(nodes);
    for (int k = 0; k < nodes; ++k) v[k] = fn(double(k) / nodes);
    return CircleMetric(std::move(v));
  }

  std::size_t size() const { return phi_.size(); }
  std::span<const double> samples() const { return phi_; }
  double operator[](std::size_t k) const { return phi_[k]; }

 private:
  std::vector<double> phi_;
};

// Interpolating cubic spline with period one through (k/n, y_k).
class PeriodicCubicSpline {
 public:
  explicit PeriodicCubicSpline(std::span<const double> y) : y_(y.begin(), y.end()) {
    const int n = static_cast<int>(y_.size());
    h_ = 1.0 / n;
    // M_{k-1} + 4 M_k + M_{k+1} = 6 (y_{k+1} - 2 y_k + y_{k-1}) / h^2, cyclic.
    std::vector<double> rhs(n);
    for (int k = 0; k < n; ++k)
      rhs[k] = 6.0 * (y_[(k + 1) % n] - 2.0 * y_[k] + y_[(k + n - 1) % n]) / (h_ * h_);
    m_ = solve_cyclic(rhs);
  }

  double operator()(double x) const {
    const int n = static_cast<int>(y_.size());
    double u = x - std::floor(x);
    double pos = u / h_;
    int k = static_cast<int>(pos);
    if (k >= n) k = n - 1;
    const double a = pos - k;  // in [0, 1)
    const int k1 = (k + 1) % n;
    const double b = 1.0 - a;
    return b * y_[k] + a * y_[k1] + (h_ * h_ / 6.0) * ((b * b * b - b) * m_[k] + (a * a * a - a) * m_[k1]);
  }

 private:
  // Sherman-Morrison on the cyclic system with diagonal 4, off-diagonals 1.
  static std::vector<double> solve_cyclic(const std::vector<double>& r) {
    const int n = static_cast<int>(r.size());
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0);
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    auto thomas = [&](std::vector<double> d) {
      std::vector<double> c(n, 1.0), bb = diag;
      for (int i = 1; i < n; ++i) {
        const double w = 1.0 / bb[i - 1];
        bb[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
      }
      std::vector<double> x(n);
      x[n - 1] = d[n - 1] / bb[n - 1];
      for (int i = n - 2; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / bb[i];
      return x;
    };
    const auto x = thomas(r);
    std::vector<double> uvec(n, 0.0);
    uvec[0] = gamma;
    uvec[n - 1] = 1.0;
    const auto z = thomas(uvec);
    const double fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
  }

  std::vector<double> y_;
  std::vector<double> m_;
  double h_;
};

struct MonodromyOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double lambda_step = 0.5;        // largest |lambda| in the Richardson table
  int richardson_levels = 3;
  double wronskian_tol = 1e-7;     // |det M - 1| above this is an accuracy failure
};

class MonodromySolver {
 public:
  using State = std::array<double, 4>;  // columns (s, p) of the fundamental matrix

  explicit MonodromySolver(MonodromyOptions opt = {}) : opt_(opt) {
    const CircleMetric flat(std::vector<double>(64, 0.0));
    raw_flat_ = raw_det(flat);
    calibration_ = 1.0 / raw_flat_;
  }

  const MonodromyOptions& options() const { return opt_; }
  double calibration() const { return calibration_; }
  double raw_flat() const { return raw_flat_; }

  // Fundamental matrix over one period, row-major {s1, s2; p1, p2}.
  std::array<double, 4> monodromy(const CircleMetric& phi, double lambda) const {
    return integrate(PeriodicCubicSpline(phi.samples()), lambda);
  }

  // F(lambda) = 2 - tr M(lambda).
  double characteristic(const CircleMetric& phi, double lambda) const {
    const auto M = monodromy(phi, lambda);
    return 2.0 - (M[0] + M[3]);
  }

  // F'(0) by Richardson extrapolation of the symmetric quotient
  // (F(l) - F(-l)) / 2l, before calibration.
  double raw_det(const CircleMetric& phi) const {
    const PeriodicCubicSpline spline(phi.samples());
    const int L = opt_.richardson_levels;
    std::vector<std::vector<double>> table(L);
    double lam = opt_.lambda_step;
    for (int i = 0; i < L; ++i, lam *= 0.5) {
      const auto plus = integrate(spline, lam);
      const auto minus = integrate(spline, -lam);
      const double fp = 2.0 - (plus[0] + plus[3]);
      const double fm = 2.0 - (minus[0] + minus[3]);
      table[i].push_back((fp - fm) / (2.0 * lam));
      double factor = 4.0;
      for (int j = 1; j <= i; ++j, factor *= 4.0)
        table[i].push_back((factor * table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0));
    }
    return table[L - 1][L - 1];
  }

  double det(const CircleMetric& phi) const { return calibration_ * raw_det(phi); }

 private:
  std::array<double, 4> integrate(const PeriodicCubicSpline& spline, double lambda) const {
    namespace odeint = boost::numeric::odeint;
    auto rhs = [&](const State& y, State& dy, double x) {
      const double e = std::exp(spline(x));
      const double ie = 1.0 / e;
      dy[0] = ie * y[2];
      dy[1] = ie * y[3];
      dy[2] = -lambda * e * y[0];
      dy[3] = -lambda * e * y[1];
    };
    State y{1.0, 0.0, 0.0, 1.0};
    auto stepper = odeint::make_controlled(opt_.abs_tol, opt_.rel_tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, y, 0.0, 1.0, 1e-3);
    const double wr = y[0] * y[3] - y[1] * y[2];
    if (std::abs(wr - 1.0) > opt_.wronskian_tol)
      throw AccuracyError("circle_det: monodromy integration missed its tolerance", std::abs(wr - 1.0));
    return {y[0], y[1], y[2], y[3]};
  }

  MonodromyOptions opt_;
  double raw_flat_ = 1.0;
  double calibration_ = 1.0;
};

inline const MonodromySolver& default_monodromy_solver() {
  static const MonodromySolver solver;
  return solver;
}

// det'(Delta_phi) by the monodromy method.
inline double circle_det(const CircleMetric& phi) { return default_monodromy_solver().det(phi); }

// log int e^phi dx + log int e^{-phi} dx (trapezoid on the samples); >= 0.
inline double circle_anomaly_formula(const CircleMetric& phi) {
  const auto s = phi.samples();
  const double peak = *std::max_element(s.begin(), s.end());
  const double low = *std::min_element(s.begin(), s.end());
  double a = 0.0, b = 0.0;
  for (double v : s) {
    a += std::exp(v - peak);
    b += std::exp(low - v);
  }
  const double n = double(s.size());
  return std::log(a / n) + peak + std::log(b / n) - low;
}

// Lowest `count` eigenvalues of the conservative finite-difference
// discretization of Delta_phi in the e^phi-weighted inner product.
inline std::vector<double> circle_eig_check(const CircleMetric& phi, int count) {
  const int n = static_cast<int>(phi.size());
  if (count < 1 || count > n / 4) throw std::invalid_argument("circle_eig_check: count must lie in [1, n/4]");
  const double h = 1.0 / n;
  const PeriodicCubicSpline spline(phi.samples());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const int k1 = (k + 1) % n;
    const double c = std::exp(spline((k + 0.5) * h)) / (h * h);
    K(k, k) += c;
    K(k1, k1) += c;
    K(k, k1) -= c;
    K(k1, k) -= c;
  }
  // symmetric form W^{-1/2} K W^{-1/2}, W = diag(e^phi)
  Eigen::VectorXd s(n);
  for (int k = 0; k < n; ++k) s[k] = std::exp(-0.5 * phi[k]);
  const Eigen::MatrixXd A = s.asDiagonal() * K * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DomainError("circle_eig_check: eigensolver failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(ev.begin(), ev.end());
  ev.resize(count);
  return ev;
}

// Periodic eigenvalue of Delta_phi near `guess`, from the characteristic
// function: a sign change is bisected, a double root (F touching zero) is
// located by golden-section minimization of F.
inline double monodromy_eigenvalue_near(const CircleMetric& phi, double guess, double rel_window = 0.05,
                                        const MonodromySolver& solver = default_monodromy_solver()) {
  if (!(guess > 0.0)) return 0.0;
  const PeriodicCubicSpline spline(phi.samples());
  auto F = [&](double l) { return solver.characteristic(phi, l); };
  const double lo = guess * (1.0 - rel_window), hi = guess * (1.0 + rel_window);
  constexpr int samples = 48;
  double best_x = guess, best_f = std::abs(F(guess));
  double prev_x = lo, prev_f = F(lo);
  double nearest_root = -1.0;
  for (int i = 1; i <= samples; ++i) {
    const double x = lo + (hi - lo) * i / samples;
    const double f = F(x);
    if ((prev_f < 0.0) != (f < 0.0)) {
      double a = prev_x, b = x, fa = prev_f;
      for (int it = 0; it < 100 && b - a > 1e-13 * guess; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = F(m);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      if (nearest_root < 0.0 || std::abs(root - guess) < std::abs(nearest_root - guess)) nearest_root = root;
    }
    if (std::abs(f) < best_f) {
      best_f = std::abs(f);
      best_x = x;
    }
    prev_x = x;
    prev_f = f;
  }
  if (nearest_root >= 0.0) return nearest_root;
  // golden section on F around the sampled minimum
  const double step = (hi - lo) / samples;
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = F(c), fd = F(d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = F(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = F(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detbound
