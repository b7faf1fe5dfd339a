#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "detbound/spectral.hpp"

using namespace detbound;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double two_pi = 2.0 * numerics::pi;

CircleMetric flat(int n = 256) { return CircleMetric(std::vector<double>(n, 0.0)); }

}  // namespace

TEST(Circle, FlatCharacteristicFunction) {
  const auto& S = default_monodromy_solver();
  for (double lam : {0.3, 3.0, 50.0}) EXPECT_NEAR(S.characteristic(flat(), lam), 4.0 * std::pow(std::sin(0.5 * std::sqrt(lam)), 2), 1e-8);
  // det_zeta(Delta + m^2) = 4 sinh^2(m/2) on the unit circle
  for (double m : {0.5, 2.0}) EXPECT_NEAR(-S.calibration() * S.characteristic(flat(), -m * m), 4.0 * std::pow(std::sinh(0.5 * m), 2), 1e-8);
}

TEST(Circle, FlatDeterminantIsOne) {
  EXPECT_NEAR(circle_det(flat()), 1.0, 1e-9);
  EXPECT_NEAR(default_monodromy_solver().raw_flat(), 1.0, 1e-8);
  EXPECT_NEAR(circle_det(CircleMetric(std::vector<double>(64, 2.5))), 1.0, 1e-8);
}

TEST(Circle, CosineMetricMatchesBesselValue) {
  for (double a : {0.5, 1.0, 2.0, 3.0}) {
    const auto phi = CircleMetric::sample(256, [a](double x) { return a * std::cos(two_pi * x); });
    EXPECT_NEAR(std::log(circle_det(phi)), 2.0 * std::log(std::cyl_bessel_i(0.0, a)), 1e-7) << a;
  }
}

TEST(Circle, DeterminantMatchesExactIntegrals) {
  auto f = [](double x) { return 0.7 * std::sin(two_pi * x) + 0.3 * std::cos(2 * two_pi * x) - 0.4 * std::sin(3 * two_pi * x); };
  const double ep = gauss_kronrod<double, 61>::integrate([&](double x) { return std::exp(f(x)); }, 0.0, 1.0, 10, 1e-14);
  const double em = gauss_kronrod<double, 61>::integrate([&](double x) { return std::exp(-f(x)); }, 0.0, 1.0, 10, 1e-14);
  const auto phi = CircleMetric::sample(256, f);
  EXPECT_NEAR(circle_det(phi), ep * em, 1e-6 * ep * em);
  EXPECT_NEAR(circle_anomaly_formula(phi), std::log(ep * em), 1e-12);
}

TEST(Circle, AnomalyFormulaIsNonnegative) {
  EXPECT_NEAR(circle_anomaly_formula(CircleMetric(std::vector<double>(128, -4.0))), 0.0, 1e-15);
  std::vector<double> v(128);
  for (int k = 0; k < 128; ++k) v[k] = (k * 37 % 11) - 5.0;
  EXPECT_GE(circle_anomaly_formula(CircleMetric(v)), 0.0);
}

TEST(Circle, DenseEigenvaluesOfFlatCircle) {
  const auto ev = circle_eig_check(flat(), 5);
  EXPECT_NEAR(ev[0], 0.0, 1e-9);
  for (int k = 1; k <= 2; ++k) {
    const double exact = std::pow(two_pi * k, 2);
    EXPECT_NEAR(ev[2 * k - 1], exact, 2e-3 * exact);
    EXPECT_NEAR(ev[2 * k], exact, 2e-3 * exact);
  }
  EXPECT_THROW(circle_eig_check(flat(), 0), std::invalid_argument);
}

TEST(Circle, MonodromyRefinesEigenvalues) {
  const auto ev = circle_eig_check(flat(), 3);
  EXPECT_NEAR(monodromy_eigenvalue_near(flat(), ev[1]), std::pow(two_pi, 2), 1e-6);
  const auto phi = CircleMetric::sample(256, [](double x) { return std::cos(two_pi * x); });
  const auto dense = circle_eig_check(phi, 4);
  for (int k = 1; k < 4; ++k) {
    const double lam = monodromy_eigenvalue_near(phi, dense[k]);
    EXPECT_NEAR(default_monodromy_solver().characteristic(phi, lam), 0.0, 1e-6);
    EXPECT_NEAR(lam, dense[k], 2e-3 * dense[k]);
  }
}

TEST(Circle, PeriodicSplineInterpolates) {
  std::vector<double> y(128);
  for (int k = 0; k < 128; ++k) y[k] = std::sin(two_pi * k / 128.0) + 0.5 * std::cos(3 * two_pi * k / 128.0);
  const PeriodicCubicSpline s(y);
  for (double x : {0.0, 0.013, 0.5, 0.77, 1.25}) {
    const double exact = std::sin(two_pi * x) + 0.5 * std::cos(3 * two_pi * x);
    EXPECT_NEAR(s(x), exact, 1e-6) << x;
  }
  EXPECT_NEAR(s(3.0 / 128.0), y[3], 1e-14);
}

TEST(Circle, InvalidSamplesAreRejected) {
  EXPECT_THROW(CircleMetric(std::vector<double>(100, 0.0)), std::invalid_argument);
  EXPECT_THROW(CircleMetric(std::vector<double>(32, 0.0)), std::invalid_argument);
  std::vector<double> v(64, 0.0);
  v[1] = INFINITY;
  EXPECT_THROW(CircleMetric(std::move(v)), std::invalid_argument);
}

TEST(Circle, UnreachableToleranceRaisesAccuracyError) {
  MonodromyOptions opt;
  opt.rel_tol = 1e-3;
  opt.abs_tol = 1e-3;
  opt.wronskian_tol = 1e-15;
  EXPECT_THROW(MonodromySolver{opt}, AccuracyError);
}
