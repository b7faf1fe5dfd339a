#pragma once

// Anomaly of log det' under a conformal change h0 -> h0 e^phi of the metric on
// O(n) over the round P^1:
//
//   A(phi) = 1/2 int phi dd^c phi - int phi (1/2 c1(T_X) + c1(L))
//          + log det( int e^{phi} <alpha_a, alpha_b> mu )
//          + log det( int e^{-phi} <beta_a, beta_b> mu ).
//
// With the round metrics c1(T_X) = 2 mu and c1(O(n)) = n mu, so the linear term
// is -(n+1) int phi mu.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "detbound/errors.hpp"
#include "detbound/geometry.hpp"
#include "detbound/numerics.hpp"

namespace detbound {

inline constexpr int default_max_degree = 8;

struct AnomalyResult {
  int n = 0;
  double total = 0.0;
  double energy_term = 0.0;  // 1/2 int phi dd^c phi
  double linear_term = 0.0;  // -int phi (1/2 c1(T_X) + c1(L))
  double h0_term = 0.0;      // log det of the alpha-Gram integral
  double h1_term = 0.0;      // log det of the beta-Gram integral
};

namespace detail {

inline void check_degree(int n, int max_degree) {
  if (std::abs(n) > max_degree)
    throw std::invalid_argument("anomaly: |n| = " + std::to_string(std::abs(n)) + " exceeds the configured maximum " +
                                std::to_string(max_degree));
}

struct LogDet {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d psi_node, Euclidean
};

// log det G with G_ab = int e^{psi} <alpha_a, alpha_b> mu for the orthonormal
// monomials of O(m), psi sampled on the nodes of `geom`.
inline LogDet gram_log_det(const SphereField& geom, std::span<const double> psi, int m, int reported_degree,
                           bool want_gradient, double tail_tol = 1e-8) {
  const int nt = geom.t_nodes();
  const int K = geom.theta_nodes();
  const int b = m + 1;
  const auto R = orthonormal_radial_factors(m, geom.grid());
  const auto mu = geom.mu_t();

  double peak = -std::numeric_limits<double>::infinity();
  for (double v : psi) peak = std::max(peak, v);

  // S[j][d] = (1/K) sum_k e^{psi_jk - peak} e^{i d theta_k}, d = 0..m
  std::vector<std::vector<std::complex<double>>> S(nt, std::vector<std::complex<double>>(b));
  std::vector<double> ex(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) ex[i] = std::exp(psi[i] - peak);
  for (int j = 0; j < nt; ++j) {
    for (int d = 0; d < b; ++d) {
      std::complex<double> s = 0.0;
      for (int k = 0; k < K; ++k) {
        const double ang = 2.0 * numerics::pi * double((static_cast<long>(d) * k) % K) / K;
        s += ex[geom.index(j, k)] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      S[j][d] = s / double(K);
    }
  }

  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(b, b);
  for (int a = 0; a < b; ++a) {
    for (int c = a; c < b; ++c) {
      std::complex<double> acc = 0.0;
      double edge = 0.0;
      for (int j = 0; j < nt; ++j) {
        const std::complex<double> term = mu[j] * R[a][j] * R[c][j] * S[j][c - a];
        acc += term;
        if (a == c && (j == 0 || j == nt - 1)) edge += std::abs(term);
      }
      // <alpha_a, alpha_c> carries (-1)^{a+c} e^{i(a-c) theta}; S holds e^{+i d theta}, d = c - a
      const double sign = ((a + c) % 2 == 0) ? 1.0 : -1.0;
      G(a, c) = sign * std::conj(acc);
      G(c, a) = std::conj(G(a, c));
      if (a == c && edge > tail_tol * std::abs(acc))
        throw DivergenceError("anomaly: e^phi-weighted section norm does not decay at the window edge (tail fraction " +
                              std::to_string(edge / std::abs(acc)) + ")");
    }
  }
  G = 0.5 * (G + G.adjoint()).eval();

  Eigen::LLT<Eigen::MatrixXcd> llt(G);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    throw DegenerateMetricError(reported_degree, lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  }
  LogDet out;
  for (int a = 0; a < b; ++a) {
    const double d = std::real(llt.matrixLLT()(a, a));
    if (!(d > 0.0)) throw DegenerateMetricError(reported_degree, std::numeric_limits<double>::infinity());
    out.value += 2.0 * std::log(d);
  }
  out.value += b * peak;

  if (want_gradient) {
    const Eigen::MatrixXcd Ginv = llt.solve(Eigen::MatrixXcd::Identity(b, b));
    out.gradient.assign(psi.size(), 0.0);
    // d log det / d psi_jk = e^{psi_jk} w_jk sum_{a,c} Ginv(c,a) <alpha_a, alpha_c>(t_j, theta_k)
    std::vector<std::complex<double>> coef(2 * b - 1);
    for (int j = 0; j < nt; ++j) {
      std::fill(coef.begin(), coef.end(), 0.0);
      for (int a = 0; a < b; ++a)
        for (int c = 0; c < b; ++c) {
          const double sign = ((a + c) % 2 == 0) ? 1.0 : -1.0;
          coef[a - c + m] += Ginv(c, a) * (sign * R[a][j] * R[c][j]);
        }
      for (int k = 0; k < K; ++k) {
        double q = 0.0;
        for (int d = -m; d <= m; ++d) {
          const double ang = 2.0 * numerics::pi * double(((static_cast<long>(d) * k) % K + K) % K) / K;
          q += std::real(coef[d + m] * std::complex<double>(std::cos(ang), std::sin(ang)));
        }
        const std::size_t idx = geom.index(j, k);
        out.gradient[idx] = ex[idx] * (mu[j] / K) * q;
      }
    }
  }
  return out;
}

// psi(t, theta) = -phi(-t, -theta): the field -phi read in the chart w = 1/z.
inline std::vector<double> antipodal_negated(const SphereField& phi) {
  const int nt = phi.t_nodes();
  const int K = phi.theta_nodes();
  std::vector<double> psi(phi.values().size());
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < K; ++k) psi[phi.index(j, k)] = -phi(phi.grid().mirror(j), K - k);
  return psi;
}

struct GeneralEvaluation {
  AnomalyResult result;
  std::vector<double> gradient;  // dA/dphi_jk, Euclidean
};

inline GeneralEvaluation evaluate_general(const SphereField& phi, int n, bool want_gradient,
                                          int max_degree = default_max_degree) {
  check_degree(n, max_degree);
  const BundleDegree deg = BundleDegree::of(n);
  GeneralEvaluation ev;
  AnomalyResult& r = ev.result;
  r.n = n;
  r.energy_term = -dirichlet_integral(phi) / (8.0 * numerics::pi);
  r.linear_term = -(n + 1) * mean(phi);
  if (want_gradient) {
    ev.gradient = dirichlet_integral_gradient(phi);
    for (double& g : ev.gradient) g *= -1.0 / (8.0 * numerics::pi);
    for (int j = 0; j < phi.t_nodes(); ++j)
      for (int k = 0; k < phi.theta_nodes(); ++k) ev.gradient[phi.index(j, k)] -= (n + 1) * phi.quad_weight(j, k);
  }
  if (deg.b0 > 0) {
    const auto ld = gram_log_det(phi, phi.values(), n, n, want_gradient);
    r.h0_term = ld.value;
    if (want_gradient)
      for (std::size_t i = 0; i < ld.gradient.size(); ++i) ev.gradient[i] += ld.gradient[i];
  }
  if (deg.b1 > 0) {
    // H^1(O(n)) pairs with H^0(O(-n-2)); the star operator is a pointwise isometry
    const int m = -n - 2;
    const auto psi = antipodal_negated(phi);
    const auto ld = gram_log_det(phi, psi, m, n, want_gradient);
    r.h1_term = ld.value;
    if (want_gradient) {
      const int K = phi.theta_nodes();
      for (int j = 0; j < phi.t_nodes(); ++j)
        for (int k = 0; k < K; ++k)
          ev.gradient[phi.index(phi.grid().mirror(j), K - k)] -= ld.gradient[phi.index(j, k)];
    }
  }
  r.total = r.energy_term + r.linear_term + r.h0_term + r.h1_term;
  return ev;
}

// Angular resolution that integrates the radial Gram of O(m) exactly.
inline int radial_theta_nodes(int n) {
  const BundleDegree d = BundleDegree::of(n);
  const int b = std::max(d.b0, d.b1);
  return std::max(4, 2 * (b + 1));
}

struct RadialEvaluation {
  AnomalyResult result;
  std::vector<double> gradient;  // dA/df_j, Euclidean
};

inline RadialEvaluation evaluate_radial(const RadialProfile& f, int n, bool want_gradient,
                                        int max_degree = default_max_degree) {
  check_degree(n, max_degree);
  RadialEvaluation ev;
  const int nt = f.size();
  if (n < 0) {
    // no separate radial formula for the H^1 branch
    const SphereField phi = lift(f, radial_theta_nodes(n));
    auto g = evaluate_general(phi, n, want_gradient, max_degree);
    ev.result = g.result;
    if (want_gradient) {
      ev.gradient.assign(nt, 0.0);
      for (int j = 0; j < nt; ++j)
        for (int k = 0; k < phi.theta_nodes(); ++k) ev.gradient[j] += g.gradient[phi.index(j, k)];
    }
    return ev;
  }

  const TGrid& grid = f.grid();
  const numerics::EnergyForm form(f.stencil_pairs(), grid.step());
  const auto mu = mu_weights(grid);
  const auto R = orthonormal_radial_factors(n, grid);
  AnomalyResult& r = ev.result;
  r.n = n;
  r.energy_term = -0.5 * form(f.values());
  double m = 0.0;
  for (int j = 0; j < nt; ++j) m += mu[j] * f[j];
  r.linear_term = -(n + 1) * m;

  double peak = -std::numeric_limits<double>::infinity();
  for (double v : f.values()) peak = std::max(peak, v);
  std::vector<double> ex(nt);
  for (int j = 0; j < nt; ++j) ex[j] = std::exp(f[j] - peak);

  if (want_gradient) {
    ev.gradient.assign(nt, 0.0);
    form.gradient(f.values(), ev.gradient);
    for (int j = 0; j < nt; ++j) ev.gradient[j] = -0.5 * ev.gradient[j] - (n + 1) * mu[j];
  }
  for (int a = 0; a <= n; ++a) {
    double Z = 0.0;
    for (int j = 0; j < nt; ++j) Z += mu[j] * R[a][j] * R[a][j] * ex[j];
    const double edge = mu[0] * R[a][0] * R[a][0] * ex[0] + mu[nt - 1] * R[a][nt - 1] * R[a][nt - 1] * ex[nt - 1];
    if (!(Z > 0.0) || edge > 1e-8 * Z)
      throw DivergenceError("anomaly_radial: e^f rho_" + std::to_string(a) +
                            " is not integrable on the window (edge fraction " + std::to_string(edge / Z) + ")");
    r.h0_term += std::log(Z) + peak;
    if (want_gradient)
      for (int j = 0; j < nt; ++j) ev.gradient[j] += mu[j] * R[a][j] * R[a][j] * ex[j] / Z;
  }
  r.total = r.energy_term + r.linear_term + r.h0_term + r.h1_term;
  return ev;
}

}  // namespace detail

inline AnomalyResult anomaly_general(const SphereField& phi, int n, int max_degree = default_max_degree) {
  return detail::evaluate_general(phi, n, false, max_degree).result;
}

inline AnomalyResult anomaly_radial(const RadialProfile& f, int n, int max_degree = default_max_degree) {
  return detail::evaluate_radial(f, n, false, max_degree).result;
}

// L^2(dt) gradient of anomaly_radial: f'' + sum_a e^f rho_a / Z_a - (n+1) rho,
// exact for the discretized functional.
inline RadialProfile anomaly_gradient(const RadialProfile& f, int n, int max_degree = default_max_degree) {
  auto ev = detail::evaluate_radial(f, n, true, max_degree);
  const auto w = f.grid().weights();
  for (int j = 0; j < f.size(); ++j) ev.gradient[j] /= w[j];
  return f.with_values(std::move(ev.gradient));
}

// L^2(dt dtheta / 2pi) gradient of anomaly_general.
inline SphereField anomaly_general_gradient(const SphereField& phi, int n, int max_degree = default_max_degree) {
  auto ev = detail::evaluate_general(phi, n, true, max_degree);
  const auto w = phi.grid().weights();
  const int K = phi.theta_nodes();
  for (int j = 0; j < phi.t_nodes(); ++j)
    for (int k = 0; k < K; ++k) ev.gradient[phi.index(j, k)] /= w[j] / K;
  return phi.with_values(std::move(ev.gradient));
}

// (A_{O(n)}(phi), A_{O(-n-2)}(-phi)); equal by Serre duality.
inline std::pair<double, double> anomaly_dual_check(const SphereField& phi, int n,
                                                    int max_degree = default_max_degree) {
  if (n < 0) throw std::invalid_argument("anomaly_dual_check: n must be nonnegative");
  std::vector<double> neg(phi.values().begin(), phi.values().end());
  for (double& v : neg) v = -v;
  return {anomaly_general(phi, n, max_degree).total,
          anomaly_general(phi.with_values(std::move(neg)), -n - 2, max_degree).total};
}

}  // namespace detbound
