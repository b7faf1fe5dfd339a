#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "detbound/anomaly.hpp"
#include "detbound/optimizer.hpp"
#include "detbound/selftest.hpp"

using namespace detbound;
using boost::math::quadrature::gauss_kronrod;

namespace {

const TGrid& grid512() {
  static const TGrid g(GridConfig{});
  return g;
}

double quad(auto f) { return gauss_kronrod<double, 61>::integrate(f, -60.0, 60.0, 20, 1e-14); }

// Radial anomaly from its definition with an independent integrator:
//   -1/2 int f'^2 - (n+1) int f rho + sum_a log( int e^f rho_a / int rho_a ).
template <class F, class DF>
double radial_oracle(F f, DF df, int n) {
  double A = -0.5 * quad([&](double t) { return df(t) * df(t); });
  A -= (n + 1) * quad([&](double t) { return f(t) * rho(t); });
  for (int a = 0; a <= n; ++a) {
    const double mass = std::tgamma(a + 1.0) * std::tgamma(n - a + 1.0) / std::tgamma(n + 2.0);
    A += std::log(quad([&](double t) { return std::exp(f(t)) * rho_i(t, a, n); }) / mass);
  }
  return A;
}

}  // namespace

TEST(Anomaly, TanhClosedForms) {
  const double one[] = {1.0}, two[] = {2.0};
  EXPECT_NEAR(anomaly_radial(profile_family("tanh", one, grid512()), 0).total, -0.171894, 1e-6);
  EXPECT_NEAR(anomaly_radial(profile_family("tanh", two, grid512()), 0).total, -0.738113, 1e-6);
  for (double a : {0.5, 1.0, 2.0}) {
    const double p[] = {a};
    EXPECT_NEAR(anomaly_radial(profile_family("tanh", p, grid512()), 0).total,
                -a * a / 3.0 + std::log(std::sinh(a) / a), 1e-7);
  }
}

TEST(Anomaly, ZeroMetricPerturbationGivesZero) {
  const auto zero = SphereField::sample(grid512(), 16, [](double, double) { return 0.0; });
  for (int n = -4; n <= 4; ++n) EXPECT_NEAR(anomaly_general(zero, n).total, 0.0, 1e-12) << n;
}

TEST(Anomaly, RadialMatchesQuadratureOracle) {
  auto f = [](double t) { return 0.8 * std::exp(-(t - 1.0) * (t - 1.0) / 4.0) + 0.5 * std::tanh(0.5 * t); };
  auto df = [](double t) {
    return -0.8 * (t - 1.0) / 2.0 * std::exp(-(t - 1.0) * (t - 1.0) / 4.0) + 0.25 / std::pow(std::cosh(0.5 * t), 2);
  };
  const auto prof = RadialProfile::sample(grid512(), f);
  for (int n : {0, 1, 2, 4}) EXPECT_NEAR(anomaly_radial(prof, n).total, radial_oracle(f, df, n), 1e-7) << n;
}

// For a Moebius pull-back J the Onofri inequality is an equality, which
// leaves A = -(1/4) int J'^2 in degree zero; J' = 2 (sigma(t) - sigma(t - s)).
TEST(Anomaly, MoebiusPullBackInDegreeZero) {
  auto sigma = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  for (double s : {-3.0, 0.7, 5.0}) {
    const double p[] = {s};
    const double energy = quad([&](double t) {
      const double d = 2.0 * (sigma(t) - sigma(t - s));
      return d * d;
    });
    EXPECT_NEAR(anomaly_radial(profile_family("conformal", p, grid512()), 0).total, -0.25 * energy, 1e-8) << s;
  }
}

TEST(Anomaly, TermsAddUp) {
  std::mt19937_64 rng(4);
  const auto phi = selftest::random_field(grid512(), 16, rng);
  for (int n : {-3, 0, 2}) {
    const auto r = anomaly_general(phi, n);
    EXPECT_EQ(r.n, n);
    EXPECT_NEAR(r.total, r.energy_term + r.linear_term + r.h0_term + r.h1_term, 1e-13);
    EXPECT_LE(r.energy_term, 0.0);
    if (n >= 0) {
      EXPECT_EQ(r.h1_term, 0.0);
    }
    if (n <= -2) {
      EXPECT_EQ(r.h0_term, 0.0);
    }
  }
}

TEST(Anomaly, ConstantShiftInvariance) {
  std::mt19937_64 rng(11);
  const auto phi = selftest::random_field(grid512(), 16, rng);
  for (int n : {-3, -1, 0, 1, 3}) {
    std::vector<double> v(phi.values().begin(), phi.values().end());
    for (double& x : v) x += 4.0;
    EXPECT_NEAR(anomaly_general(phi.with_values(v), n).total, anomaly_general(phi, n).total, 1e-9) << n;
  }
}

TEST(Anomaly, SerreDualityForRandomFields) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 3; ++i) {
    const auto phi = selftest::random_field(grid512(), 16, rng);
    for (int n : {0, 1, 2}) {
      const auto [a, b] = anomaly_dual_check(phi, n);
      EXPECT_NEAR(a, b, 1e-8) << n;
    }
  }
  EXPECT_THROW(anomaly_dual_check(selftest::random_field(grid512(), 16, rng), -1), std::invalid_argument);
}

TEST(Anomaly, RadialAndLiftedGeneralAgreeForNegativeDegrees) {
  const double p[] = {1.2, 3.0, 1.0};
  const auto f = profile_family("tent", p, grid512());
  for (int n : {-2, -3, -4}) EXPECT_NEAR(anomaly_radial(f, n).total, anomaly_general(lift(f, 16), n).total, 1e-9);
}

TEST(Anomaly, RadialGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const auto f = selftest::random_profile(grid512(), rng);
  const auto v = selftest::random_profile(grid512(), rng);
  for (int n : {0, 2, -3}) {
    const auto g = anomaly_gradient(f, n);
    double analytic = 0.0;
    for (int j = 0; j < f.size(); ++j) analytic += grid512().weights()[j] * g[j] * v[j];
    const double eps = 1e-4;
    std::vector<double> a(f.size()), b(f.size());
    for (int j = 0; j < f.size(); ++j) {
      a[j] = f[j] + eps * v[j];
      b[j] = f[j] - eps * v[j];
    }
    const double fd = (anomaly_radial(f.with_values(a), n).total - anomaly_radial(f.with_values(b), n).total) / (2 * eps);
    EXPECT_NEAR(analytic, fd, 1e-6 * std::max(1.0, std::abs(fd))) << n;
  }
}

TEST(Anomaly, GeneralGradientMatchesFiniteDifferences) {
  const TGrid g(30.0, 192);
  std::mt19937_64 rng(22);
  const auto phi = selftest::random_field(g, 8, rng);
  const auto dir = selftest::random_field(g, 8, rng);
  for (int n : {1, -3}) {
    const auto grad = anomaly_general_gradient(phi, n);
    double analytic = 0.0;
    for (int j = 0; j < g.size(); ++j)
      for (int k = 0; k < 8; ++k) analytic += g.weights()[j] / 8.0 * grad(j, k) * dir(j, k);
    const double eps = 1e-4;
    std::vector<double> a(phi.values().size()), b(phi.values().size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = phi.values()[i] + eps * dir.values()[i];
      b[i] = phi.values()[i] - eps * dir.values()[i];
    }
    const double fd =
        (anomaly_general(phi.with_values(a), n).total - anomaly_general(phi.with_values(b), n).total) / (2 * eps);
    EXPECT_NEAR(analytic, fd, 1e-6 * std::max(1.0, std::abs(fd))) << n;
  }
}

TEST(Anomaly, GradientVanishesAtZeroInDegreeZero) {
  const auto zero = RadialProfile::sample(grid512(), [](double) { return 0.0; });
  const auto g = anomaly_gradient(zero, 0);
  for (int j = 0; j < zero.size(); ++j) EXPECT_NEAR(g[j], 0.0, 1e-12);
}

TEST(Anomaly, NonIntegrableWeightIsReported) {
  const auto f = RadialProfile::sample(grid512(), [](double t) { return 1.5 * std::abs(t); });
  EXPECT_THROW(anomaly_radial(f, 0), DivergenceError);
  EXPECT_THROW(anomaly_general(lift(f, 8), 2), DivergenceError);
}

TEST(Anomaly, DegreeOutsideConfiguredRangeIsRejected) {
  const auto zero = RadialProfile::sample(grid512(), [](double) { return 0.0; });
  EXPECT_THROW(anomaly_radial(zero, 9), std::invalid_argument);
  EXPECT_THROW(anomaly_radial(zero, -11), std::invalid_argument);
  EXPECT_NO_THROW(anomaly_radial(zero, 9, 12));
}

TEST(Anomaly, DegenerateMetricErrorCarriesDegree) {
  const DegenerateMetricError e(3, 1e18);
  EXPECT_EQ(e.degree(), 3);
  EXPECT_NE(std::string(e.what()).find("O(3)"), std::string::npos);
}
