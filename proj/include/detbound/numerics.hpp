#pragma once

// Small numerical kernels: finite-difference weights, the compact energy form,
// stable exponentials.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace detbound::numerics {

inline constexpr double pi = std::numbers::pi;

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// expm1(x) / x, continuous at 0.
inline double expm1_ratio(double x) {
  return std::abs(x) < 1e-8 ? 1.0 + 0.5 * x : std::expm1(x) / x;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Fornberg's recursion: weights of the m-th derivative at x0 from nodes x.
inline std::vector<double> fornberg_weights(double x0, std::span<const double> x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

// Coefficients c_1..c_p of the order-2p central second difference
//   f'' ~ h^-2 sum_m c_m (f_{k+m} - 2 f_k + f_{k-m}),  sum_m c_m m^2 = 1.
inline std::vector<double> laplacian_pair_coefficients(int pairs) {
  std::vector<double> c(pairs);
  for (int m = 1; m <= pairs; ++m) {
    // 2 (-1)^{m+1} (p!)^2 / (m^2 (p-m)! (p+m)!), evaluated as a ratio of binomials
    const double ratio = binomial(2 * pairs, pairs - m) / binomial(2 * pairs, pairs);
    c[m - 1] = 2.0 * ((m % 2 == 1) ? 1.0 : -1.0) * ratio / (double(m) * m);
  }
  return c;
}

// Compact quadratic energy on a uniform grid,
//   E(f) = h^-1 sum_m c_m sum_k (f_{k+m} - f_k)^2,
// which approximates int f'^2 dt to order 2p for profiles that flatten at the
// window edges. Positive semidefinite with kernel = constants.
class EnergyForm {
 public:
  EnergyForm(int pairs, double step) : coeff_(laplacian_pair_coefficients(pairs)), h_(step) {
    if (!(step > 0.0)) throw std::invalid_argument("EnergyForm: step must be positive");
  }

  int pairs() const { return static_cast<int>(coeff_.size()); }
  double step() const { return h_; }
  std::span<const double> coefficients() const { return coeff_; }

  double operator()(std::span<const double> f) const {
    const std::size_t n = f.size();
    double e = 0.0;
    for (std::size_t m = 1; m <= coeff_.size() && m < n; ++m) {
      double s = 0.0;
      for (std::size_t k = 0; k + m < n; ++k) {
        const double d = f[k + m] - f[k];
        s += d * d;
      }
      e += coeff_[m - 1] * s;
    }
    return e / h_;
  }

  // out[k] = dE/df_k.
  void gradient(std::span<const double> f, std::span<double> out) const {
    const std::size_t n = f.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t m = 1; m <= coeff_.size() && m < n; ++m) {
      const double w = 2.0 * coeff_[m - 1] / h_;
      for (std::size_t k = 0; k + m < n; ++k) {
        const double d = w * (f[k + m] - f[k]);
        out[k + m] += d;
        out[k] -= d;
      }
    }
  }

  // Banded Hessian of E/2 as (row, col, value) triplets, for preconditioners.
  template <class Emit>
  void hessian_half(std::size_t n, Emit&& emit) const {
    std::vector<double> diag(n, 0.0);
    for (std::size_t m = 1; m <= coeff_.size() && m < n; ++m) {
      const double w = coeff_[m - 1] / h_;
      for (std::size_t k = 0; k + m < n; ++k) {
        diag[k] += w;
        diag[k + m] += w;
        emit(k, k + m, -w);
        emit(k + m, k, -w);
      }
    }
    for (std::size_t k = 0; k < n; ++k) emit(k, k, diag[k]);
  }

 private:
  std::vector<double> coeff_;
  double h_;
};

// First derivative on a uniform grid: central order-2p stencil in the
// interior, one-sided Fornberg stencils of the same width near the edges.
inline std::vector<double> differentiate(std::span<const double> f, double h, int pairs) {
  const int n = static_cast<int>(f.size());
  const int width = std::min(2 * pairs + 1, n);
  std::vector<double> out(n, 0.0);
  std::vector<double> offsets(width);
  for (int k = 0; k < n; ++k) {
    int start = std::clamp(k - pairs, 0, n - width);
    for (int i = 0; i < width; ++i) offsets[i] = double(start + i - k);
    const auto w = fornberg_weights(0.0, offsets, 1);
    double d = 0.0;
    for (int i = 0; i < width; ++i) d += w[i] * f[start + i];
    out[k] = d / h;
  }
  return out;
}

// log(sum_k w_k exp(x_k)) for nonnegative weights.
inline double log_weighted_sum_exp(std::span<const double> w, std::span<const double> x) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k)
    if (w[k] > 0.0) peak = std::max(peak, x[k]);
  if (!std::isfinite(peak)) return peak;
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (w[k] > 0.0) s += w[k] * std::exp(x[k] - peak);
  return peak + std::log(s);
}

}  // namespace detbound::numerics
