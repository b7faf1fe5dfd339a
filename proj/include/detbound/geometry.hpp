#pragma once

// Grids, the normalized round measure on P^1, radial densities and the
// pointwise inner products of holomorphic sections of O(n).
//
// Coordinates: z = r e^{i theta} on the affine chart, t = 2 log r. In these
// coordinates the Fubini-Study area form of total mass one is
//   mu = rho(t) dt dtheta / 2pi,   rho(t) = (e^{t/2} + e^{-t/2})^{-2}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "detbound/config.hpp"
#include "detbound/errors.hpp"
#include "detbound/numerics.hpp"

namespace detbound {

// ---------------------------------------------------------------------------
// Densities

inline double rho(double t) {
  const double c = std::cosh(0.5 * t);
  return 0.25 / (c * c);
}

// rho_i(t) = e^{i t} (1 + e^t)^{-n} rho(t), 0 <= i <= n.
inline double rho_i(double t, int i, int n) {
  if (n < 0 || i < 0 || i > n) throw std::invalid_argument("rho_i: index must lie in [0, n]");
  // e^{(i+1) t} / (1 + e^t)^{n+2}
  return std::exp((i + 1) * t - (n + 2) * numerics::softplus(t));
}

// ---------------------------------------------------------------------------
// Bundle degree

struct BundleDegree {
  int n = 0;
  int b0 = 1;  // dim H^0(O(n))
  int b1 = 0;  // dim H^1(O(n))

  static BundleDegree of(int degree) {
    BundleDegree d;
    d.n = degree;
    d.b0 = degree >= 0 ? degree + 1 : 0;
    d.b1 = degree <= -1 ? -degree - 1 : 0;
    return d;
  }

  // O(-n-2), the Serre dual on P^1.
  BundleDegree dual() const { return of(-n - 2); }
};

// ---------------------------------------------------------------------------
// Uniform symmetric t-grid with trapezoid weights

class TGrid {
 public:
  TGrid(double half_width, int nodes) : T_(half_width) {
    if (!(half_width >= 20.0)) throw std::invalid_argument("TGrid: window half-width must be >= 20");
    if (nodes < 16) throw std::invalid_argument("TGrid: need at least 16 nodes");
    t_.resize(nodes);
    for (int k = 0; k < nodes; ++k) t_[k] = -T_ + 2.0 * T_ * k / (nodes - 1);
    for (int k = 0; k < nodes / 2; ++k) t_[nodes - 1 - k] = -t_[k];
    if (nodes % 2 == 1) t_[nodes / 2] = 0.0;
    h_ = 2.0 * T_ / (nodes - 1);
    w_.assign(nodes, h_);
    w_.front() = w_.back() = 0.5 * h_;
  }

  explicit TGrid(const GridConfig& cfg) : TGrid(cfg.T, cfg.t_nodes) {}

  // Accepts explicit samples if they form a uniform grid symmetric about 0.
  static TGrid from_samples(std::span<const double> t) {
    if (t.size() < 16) throw std::invalid_argument("TGrid: need at least 16 nodes");
    for (std::size_t k = 1; k < t.size(); ++k)
      if (!(t[k] > t[k - 1])) throw std::invalid_argument("TGrid: samples must be strictly increasing");
    TGrid g(-t.front(), static_cast<int>(t.size()));
    const double tol = 1e-9 * g.T_;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (std::abs(t[k] - g.t_[k]) > tol)
        throw std::invalid_argument("TGrid: samples must be uniform and symmetric about 0");
    return g;
  }

  int size() const { return static_cast<int>(t_.size()); }
  double half_width() const { return T_; }
  double step() const { return h_; }
  double operator[](int k) const { return t_[k]; }
  std::span<const double> nodes() const { return t_; }
  std::span<const double> weights() const { return w_; }

  // Index of the node at -t_k.
  int mirror(int k) const { return size() - 1 - k; }

  friend bool operator==(const TGrid& a, const TGrid& b) {
    return a.t_.size() == b.t_.size() && a.T_ == b.T_;
  }

 private:
  double T_;
  double h_ = 0.0;
  std::vector<double> t_;
  std::vector<double> w_;
};

// Trapezoid weights for int . rho dt, normalized to total mass exactly one.
inline std::vector<double> mu_weights(const TGrid& grid) {
  std::vector<double> w(grid.size());
  for (int k = 0; k < grid.size(); ++k) w[k] = grid.weights()[k] * rho(grid[k]);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

// ---------------------------------------------------------------------------
// Radial profiles f(t)

class RadialProfile {
 public:
  RadialProfile(TGrid grid, std::vector<double> values, int stencil_pairs = 4)
      : grid_(std::move(grid)), values_(std::move(values)), pairs_(stencil_pairs) {
    if (static_cast<int>(values_.size()) != grid_.size())
      throw std::invalid_argument("RadialProfile: values and grid differ in length");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("RadialProfile: non-finite value");
    derivative_ = numerics::differentiate(values_, grid_.step(), pairs_);
  }

  template <class Fn>
  static RadialProfile sample(const TGrid& grid, Fn&& fn, int stencil_pairs = 4) {
    std::vector<double> v(grid.size());
    for (int k = 0; k < grid.size(); ++k) v[k] = fn(grid[k]);
    return RadialProfile(grid, std::move(v), stencil_pairs);
  }

  const TGrid& grid() const { return grid_; }
  int stencil_pairs() const { return pairs_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> derivative() const { return derivative_; }
  double operator[](int k) const { return values_[k]; }
  int size() const { return grid_.size(); }

  RadialProfile with_values(std::vector<double> v) const { return RadialProfile(grid_, std::move(v), pairs_); }

 private:
  TGrid grid_;
  std::vector<double> values_;
  std::vector<double> derivative_;
  int pairs_;
};

// int f'(t)^2 dt with the compact high-order form.
inline double radial_energy(const RadialProfile& f) {
  return numerics::EnergyForm(f.stencil_pairs(), f.grid().step())(f.values());
}

// int f'^2 dt of the piecewise-linear interpolant of the samples.
inline double cell_energy(std::span<const double> values, double step) {
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double d = values[k + 1] - values[k];
    e += d * d;
  }
  return e / step;
}

inline double cell_energy(const RadialProfile& f) { return cell_energy(f.values(), f.grid().step()); }

// ---------------------------------------------------------------------------
// Fields on P^1 sampled on the (t, theta) product grid

class SphereField {
 public:
  SphereField(TGrid grid, int theta_nodes, std::vector<double> values, int stencil_pairs = 4)
      : grid_(std::move(grid)), K_(theta_nodes), values_(std::move(values)), pairs_(stencil_pairs) {
    if (K_ < 1) throw std::invalid_argument("SphereField: need at least one theta node");
    if (values_.size() != static_cast<std::size_t>(grid_.size()) * K_)
      throw std::invalid_argument("SphereField: value array does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("SphereField: non-finite value");
    mu_t_ = mu_weights(grid_);
  }

  // fn(t, theta)
  template <class Fn>
  static SphereField sample(const TGrid& grid, int theta_nodes, Fn&& fn, int stencil_pairs = 4) {
    std::vector<double> v(static_cast<std::size_t>(grid.size()) * theta_nodes);
    for (int j = 0; j < grid.size(); ++j)
      for (int k = 0; k < theta_nodes; ++k)
        v[static_cast<std::size_t>(j) * theta_nodes + k] = fn(grid[j], theta(k, theta_nodes));
    return SphereField(grid, theta_nodes, std::move(v), stencil_pairs);
  }

  static double theta(int k, int K) { return 2.0 * numerics::pi * k / K; }

  const TGrid& grid() const { return grid_; }
  int t_nodes() const { return grid_.size(); }
  int theta_nodes() const { return K_; }
  int stencil_pairs() const { return pairs_; }
  std::span<const double> values() const { return values_; }
  double operator()(int j, int k) const { return values_[index(j, k)]; }
  std::span<const double> row(int j) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(j) * K_, K_);
  }

  // Weights for int . mu at node (j, k); they sum to one.
  double quad_weight(int j, int /*k*/) const { return mu_t_[j] / K_; }
  std::span<const double> mu_t() const { return mu_t_; }

  std::size_t index(int j, int k) const {
    return static_cast<std::size_t>(j) * K_ + static_cast<std::size_t>(((k % K_) + K_) % K_);
  }

  SphereField with_values(std::vector<double> v) const {
    return SphereField(grid_, K_, std::move(v), pairs_);
  }

 private:
  TGrid grid_;
  int K_;
  std::vector<double> values_;
  int pairs_;
  std::vector<double> mu_t_;
};

inline SphereField lift(const RadialProfile& f, int theta_nodes) {
  std::vector<double> v(static_cast<std::size_t>(f.size()) * theta_nodes);
  for (int j = 0; j < f.size(); ++j)
    std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(j) * theta_nodes, theta_nodes, f[j]);
  return SphereField(f.grid(), theta_nodes, std::move(v), f.stencil_pairs());
}

// Cartesian coordinates on the unit sphere under stereographic projection.
struct SpherePoint {
  double x1, x2, x3;
};

inline SpherePoint sphere_point(double t, double theta) {
  const double s = 1.0 / std::cosh(0.5 * t);
  return {s * std::cos(theta), s * std::sin(theta), std::tanh(0.5 * t)};
}

// ---------------------------------------------------------------------------
// Angular Fourier helpers (trapezoid rule on K equispaced nodes)

namespace detail {

// Real Fourier coefficients a_m, b_m (m = 0..K/2) of one row.
inline void real_dft(std::span<const double> row, std::vector<double>& a, std::vector<double>& b) {
  const int K = static_cast<int>(row.size());
  const int half = K / 2;
  a.assign(half + 1, 0.0);
  b.assign(half + 1, 0.0);
  for (int m = 0; m <= half; ++m) {
    double sa = 0.0, sb = 0.0;
    for (int k = 0; k < K; ++k) {
      const double ang = 2.0 * numerics::pi * double((static_cast<long>(m) * k) % K) / K;
      sa += row[k] * std::cos(ang);
      sb += row[k] * std::sin(ang);
    }
    a[m] = sa / K;
    b[m] = sb / K;
  }
}

// Weight of |mode m|^2 in (1/2pi) int phi_theta^2 dtheta:
// 2 m^2 for 0 < m < K/2 (both signs), (K/2)^2 for the Nyquist mode.
inline double theta_mode_weight(int m, int K) {
  if (m == 0) return 0.0;
  if (2 * m == K) return double(m) * m;
  return 2.0 * double(m) * m;
}

// (1/2pi) int phi_theta^2 dtheta for one row.
inline double theta_energy(std::span<const double> row) {
  const int K = static_cast<int>(row.size());
  if (K < 2) return 0.0;
  std::vector<double> a, b;
  real_dft(row, a, b);
  double e = 0.0;
  for (int m = 1; m <= K / 2; ++m) e += theta_mode_weight(m, K) * (a[m] * a[m] + b[m] * b[m]);
  return e;
}

// Gradient of theta_energy with respect to the row samples.
inline void theta_energy_gradient(std::span<const double> row, std::span<double> out) {
  const int K = static_cast<int>(row.size());
  std::fill(out.begin(), out.end(), 0.0);
  if (K < 2) return;
  std::vector<double> a, b;
  real_dft(row, a, b);
  for (int k = 0; k < K; ++k) {
    double g = 0.0;
    for (int m = 1; m <= K / 2; ++m) {
      const double ang = 2.0 * numerics::pi * double((static_cast<long>(m) * k) % K) / K;
      g += theta_mode_weight(m, K) * (a[m] * std::cos(ang) + b[m] * std::sin(ang));
    }
    out[k] = 2.0 * g / K;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dirichlet energy

// Conformally invariant Dirichlet integral int |grad phi|^2 dA, evaluated in
// the conformal coordinates (t/2, theta):
//   D = int int (2 phi_t^2 + phi_theta^2 / 2) dt dtheta.
// A radial profile has D = 4 pi int f'^2 dt.
inline double dirichlet_integral(const SphereField& phi) {
  const int n = phi.t_nodes();
  const int K = phi.theta_nodes();
  const numerics::EnergyForm form(phi.stencil_pairs(), phi.grid().step());
  std::vector<double> column(n);
  double t_part = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < n; ++j) column[j] = phi(j, k);
    t_part += form(column);
  }
  t_part *= 2.0 * (2.0 * numerics::pi / K);
  double theta_part = 0.0;
  for (int j = 0; j < n; ++j) theta_part += phi.grid().weights()[j] * detail::theta_energy(phi.row(j));
  theta_part *= 0.5 * 2.0 * numerics::pi;
  return t_part + theta_part;
}

// dD/dphi at every node, laid out like SphereField::values().
inline std::vector<double> dirichlet_integral_gradient(const SphereField& phi) {
  const int n = phi.t_nodes();
  const int K = phi.theta_nodes();
  const numerics::EnergyForm form(phi.stencil_pairs(), phi.grid().step());
  std::vector<double> out(phi.values().size(), 0.0);
  std::vector<double> column(n), gcol(n), grow(K);
  const double t_scale = 2.0 * (2.0 * numerics::pi / K);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < n; ++j) column[j] = phi(j, k);
    form.gradient(column, gcol);
    for (int j = 0; j < n; ++j) out[phi.index(j, k)] += t_scale * gcol[j];
  }
  for (int j = 0; j < n; ++j) {
    detail::theta_energy_gradient(phi.row(j), grow);
    const double s = phi.grid().weights()[j] * numerics::pi;
    for (int k = 0; k < K; ++k) out[phi.index(j, k)] += s * grow[k];
  }
  return out;
}

// int_X phi dd^c phi = -(1/4pi) int |grad phi|^2 mu  (nonpositive).
inline double dirichlet_energy(const SphereField& phi) { return -dirichlet_integral(phi) / (4.0 * numerics::pi); }

// ---------------------------------------------------------------------------
// Means

inline double mean(const RadialProfile& f) {
  const auto w = mu_weights(f.grid());
  double s = 0.0;
  for (int k = 0; k < f.size(); ++k) s += w[k] * f[k];
  return s;
}

inline double mean(const SphereField& phi) {
  double s = 0.0;
  for (int j = 0; j < phi.t_nodes(); ++j) {
    double r = 0.0;
    for (double v : phi.row(j)) r += v;
    s += phi.mu_t()[j] * r / phi.theta_nodes();
  }
  return s;
}

inline RadialProfile mean_normalize(const RadialProfile& f) {
  const double m = mean(f);
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x -= m;
  return f.with_values(std::move(v));
}

inline SphereField mean_normalize(const SphereField& phi) {
  const double m = mean(phi);
  std::vector<double> v(phi.values().begin(), phi.values().end());
  for (double& x : v) x -= m;
  return phi.with_values(std::move(v));
}

// ---------------------------------------------------------------------------
// Sections of O(n)

// Pointwise inner products of the monomials A^{n-a} B^a (a = B-exponent) at z,
// for the metric induced by the standard metric on C^2:
//   <A^{n-a}B^a, A^{n-b}B^b> = C(n,a) C(n,b) (-z)^a (-conj z)^b / (1+|z|^2)^n.
inline Eigen::MatrixXcd pointwise_gram(std::complex<double> z, int n) {
  if (n < 0) throw std::invalid_argument("pointwise_gram: degree must be nonnegative");
  const double N = 1.0 + std::norm(z);
  Eigen::VectorXcd v(n + 1);
  std::complex<double> p = 1.0;
  for (int a = 0; a <= n; ++a) {
    v[a] = numerics::binomial(n, a) * p;
    p *= -z;
  }
  Eigen::MatrixXcd g = v * v.adjoint();
  return g / std::pow(N, n);
}

// Scale factors s_a = 1 / ||A^{n-a} B^a||_{L^2} so that s_a A^{n-a}B^a is
// L^2-orthonormal for (h_0, mu). The norms are computed by quadrature on the
// grid and cross-checked against the half-resolution rule.
inline std::vector<double> l2_orthonormal_basis(int n, const TGrid& grid, double tol = 1e-9) {
  if (n < 0) throw std::invalid_argument("l2_orthonormal_basis: degree must be nonnegative");
  const auto w = mu_weights(grid);
  std::vector<double> scale(n + 1);
  for (int a = 0; a <= n; ++a) {
    const double c2 = numerics::binomial(n, a) * numerics::binomial(n, a);
    double fine = 0.0, coarse = 0.0, coarse_mass = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      const double val = c2 * std::exp(a * t - n * numerics::softplus(t));
      fine += w[k] * val;
      if (k % 2 == 0) {
        const double wk = grid.weights()[k] * rho(t);
        coarse += wk * val;
        coarse_mass += wk;
      }
    }
    coarse /= coarse_mass;
    if (!(fine > 0.0) || !std::isfinite(fine) || std::abs(fine - coarse) > tol * fine)
      throw QuadratureError("l2_orthonormal_basis: norm of monomial " + std::to_string(a) + " in degree " +
                            std::to_string(n) + " did not converge");
    scale[a] = 1.0 / std::sqrt(fine);
  }
  return scale;
}

// Radial factor R_a(t) of the orthonormal section alpha_a, |alpha_a|^2 = R_a^2:
//   R_a(t) = s_a C(n,a) e^{a t/2} (1 + e^t)^{-n/2}.
// The angular factor is (-1)^a e^{i a theta}.
inline std::vector<std::vector<double>> orthonormal_radial_factors(int n, const TGrid& grid) {
  const auto scale = l2_orthonormal_basis(n, grid);
  std::vector<std::vector<double>> R(n + 1, std::vector<double>(grid.size()));
  for (int a = 0; a <= n; ++a) {
    const double c = scale[a] * numerics::binomial(n, a);
    for (int k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      R[a][k] = c * std::exp(0.5 * a * t - 0.5 * n * numerics::softplus(t));
    }
  }
  return R;
}

}  // namespace detbound
