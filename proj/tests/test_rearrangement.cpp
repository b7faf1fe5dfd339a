#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "detbound/rearrangement.hpp"
#include "detbound/selftest.hpp"

using namespace detbound;

namespace {

HalfLineFunction uniform(std::vector<double> values, double h = 0.5) {
  std::vector<double> s(values.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = h * k;
  return HalfLineFunction(std::move(s), std::move(values));
}

}  // namespace

TEST(Rearrangement, StepFunctionIsSortedExactly) {
  const auto g = uniform({1.0, 4.0, 0.0, 2.0, 4.0, -1.0, 0.0});
  const auto r = decreasing_rearrangement(g);
  const std::vector<double> expect{4.0, 4.0, 2.0, 1.0, 0.0, -1.0, -1.0};
  for (std::size_t k = 0; k < expect.size(); ++k) EXPECT_EQ(r.values()[k], expect[k]) << k;
}

TEST(Rearrangement, MonotoneInputIsAFixedPoint) {
  const auto g = uniform({5.0, 3.0, 3.0, 1.0, 0.5, 0.0});
  const auto r = decreasing_rearrangement(g);
  // the last node carries the value of the last cell
  for (std::size_t k = 0; k + 1 < g.size(); ++k) EXPECT_EQ(r.values()[k], g.values()[k]);
  EXPECT_EQ(r.values().back(), g.values()[g.size() - 2]);
}

TEST(Rearrangement, NonUniformCellsPreserveMoments) {
  std::vector<double> s{0.0, 0.2, 1.0, 1.1, 2.5, 3.0};
  std::vector<double> v{0.5, 2.0, -0.3, 1.0, 0.1, 0.0};
  const HalfLineFunction g(s, v);
  const auto r = decreasing_rearrangement(g);
  EXPECT_NEAR(step_moment(r, 1), step_moment(g, 1), 1e-14);
  for (std::size_t k = 1; k + 1 < r.size(); ++k) EXPECT_LE(r.values()[k], r.values()[k - 1] + 1e-15);
}

TEST(Rearrangement, EquimeasurableAndHardyLittlewood) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto p = selftest::HalfLineProbe::draw(rng);
    std::vector<double> s(801), v(801);
    for (int k = 0; k <= 800; ++k) {
      s[k] = 40.0 * k / 800.0;
      v[k] = p.slope(s[k]);
    }
    const HalfLineFunction g(s, v);
    const auto r = decreasing_rearrangement(g, 1e-3);
    for (int power : {1, 2, 3}) EXPECT_NEAR(step_moment(r, power), step_moment(g, power), 1e-10);
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
      a += r.values()[k] * g.width(k);
      b += g.values()[k] * g.width(k);
      EXPECT_GE(a, b - 1e-12);
    }
  }
}

TEST(Rearrangement, NonDecayingInputIsRejected) {
  EXPECT_THROW(decreasing_rearrangement(uniform({1.0, 2.0, 3.0, 4.0})), DivergenceError);
}

TEST(Rearrangement, EnvelopeProperties) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto f = selftest::HalfLineProbe::draw(rng).sample(30.0, 1201);
    const auto u = monotone_envelope(f);
    EXPECT_NEAR(u.values().front(), f.values().front(), 1e-15);
    EXPECT_NEAR(u.values().back(), f.values().back(), 1e-9);
    EXPECT_NEAR(slope_energy(u), slope_energy(f), 1e-9);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_GE(u.values()[k], f.values()[k] - 1e-10);
    const auto d = u.derivative();
    for (std::size_t k = 1; k < d.size(); ++k) EXPECT_LE(d[k], d[k - 1]);
  }
}

TEST(Rearrangement, EnvelopeOfConcaveFunctionIsItself) {
  const auto f = HalfLineFunction::sample(10.0, 201, [](double t) { return 2.0 - std::exp(-t); });
  const auto u = monotone_envelope(f);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(u.values()[k], f.values()[k], 1e-13);
}

TEST(Rearrangement, SlopeAtUsesDerivativeSamplesWhenPresent) {
  const auto u = HalfLineFunction::sample(
      4.0, 5, [](double t) { return t * t; }, [](double t) { return 2 * t; });
  EXPECT_NEAR(u.slope_at(1.5), 3.0, 1e-15);
  const auto w = HalfLineFunction::sample(4.0, 5, [](double t) { return t * t; });
  EXPECT_NEAR(w.slope_at(1.5), 3.0, 1e-15);  // cell [1, 2]
}

TEST(Rearrangement, InvalidGridsAreRejected) {
  EXPECT_THROW(HalfLineFunction({0.5, 1.0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(HalfLineFunction({0.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(HalfLineFunction({0.0, 1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(HalfLineFunction({0.0}, {1.0}), std::invalid_argument);
}
