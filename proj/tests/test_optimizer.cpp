#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "detbound/optimizer.hpp"

using namespace detbound;

namespace {

SearchConfig quick(int n) {
  SearchConfig c;
  c.n = n;
  c.restarts = 2;
  c.seed = 42;
  c.grid.t_nodes = 256;
  return c;
}

}  // namespace

TEST(ProfileFamily, TanhEnergy) {
  const double a = 1.0;
  const double p[] = {a};
  const auto f = profile_family("tanh", p);
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double t) { return std::pow(0.5 / std::pow(std::cosh(0.5 * t), 2), 2); }, -60.0, 60.0, 15, 1e-14);
  EXPECT_NEAR(oracle, 2.0 / 3.0, 1e-13);
  EXPECT_NEAR(radial_energy(f), 2.0 / 3.0, 1e-8);
}

TEST(ProfileFamily, TentEnergy) {
  const TGrid g(40.0, 801);  // nodes at multiples of 0.1
  for (auto [h, w] : {std::pair{1.0, 2.0}, std::pair{-0.5, 0.5}, std::pair{3.0, 10.0}}) {
    const double p[] = {h, w};
    EXPECT_NEAR(cell_energy(profile_family("tent", p, g)), 2.0 * h * h / w, 1e-9 * h * h);
  }
}

TEST(ProfileFamily, ZeroAndErrors) {
  const auto z = profile_family("zero", {});
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(z.size(), GridConfig{}.t_nodes);
  EXPECT_THROW(profile_family("sawtooth", {}), std::invalid_argument);
  EXPECT_THROW(profile_family("tanh", {}), std::invalid_argument);
  const double bad[] = {1.0, -1.0};
  EXPECT_THROW(profile_family("tent", bad), std::invalid_argument);
}

TEST(ProfileFamily, FourierIsSmoothAcrossThePoles) {
  const double c[] = {1.0, -0.5};
  const auto f = profile_family("fourier", c);
  EXPECT_NEAR(f[0], 1.0 - 0.5, 1e-12);              // x = 0
  EXPECT_NEAR(f[f.size() - 1], -1.0 - 0.5, 1e-12);  // x = 1
}

TEST(Search, RejectsBadConfig) {
  SearchConfig c;
  c.max_iters = 0;
  EXPECT_THROW(search_sup(c), std::invalid_argument);
  c = SearchConfig{};
  c.energy_cap = 0.0;
  EXPECT_THROW(search_sup(c), std::invalid_argument);
  c = SearchConfig{};
  c.n = 20;
  EXPECT_THROW(search_sup(c), std::invalid_argument);
}

TEST(Search, TracesAreMonotone) {
  for (int n : {0, 1, -3}) {
    const auto res = search_sup(quick(n));
    for (const auto& t : res.traces) {
      ASSERT_FALSE(t.rows.empty());
      for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GE(t.rows[i].value, t.rows[i - 1].value);
    }
  }
}

TEST(Search, DegreeZeroConvergesToOnofriBound) {
  const auto res = search_sup(quick(0));
  for (const auto& t : res.traces) {
    EXPECT_EQ(t.status, SearchStatus::plateaued);
    EXPECT_LE(t.best_value(), 1e-9);
    EXPECT_GE(t.best_value(), -1e-3);
  }
}

TEST(Search, DeterministicAndOrderIndependent) {
  const auto cfg = quick(1);
  const auto a = search_sup(cfg);
  const auto b = search_sup(cfg);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    ASSERT_EQ(a.traces[i].rows.size(), b.traces[i].rows.size());
    for (std::size_t k = 0; k < a.traces[i].rows.size(); ++k) EXPECT_EQ(a.traces[i].rows[k].value, b.traces[i].rows[k].value);
  }
  // the same trace is produced when a restart runs on its own
  const TGrid grid(cfg.grid);
  std::mt19937_64 rng(restart_seed(cfg.seed, 1));
  const auto solo = run_trace(cfg, detail::random_start(cfg, grid, 1, rng), 1, restart_seed(cfg.seed, 1));
  EXPECT_EQ(solo.best_value(), a.traces[1].best_value());
  EXPECT_EQ(a.best_index, b.best_index);
}

TEST(Search, ConstantShiftLeavesTraceUnchanged) {
  auto cfg = quick(2);
  cfg.restarts = 1;
  const auto plain = search_sup(cfg);
  cfg.shift = 5.0;
  const auto shifted = search_sup(cfg);
  const auto& a = plain.traces[0].rows;
  const auto& b = shifted.traces[0].rows;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].value, b[i].value, 1e-8);
}

TEST(Search, EnergyCapAbortsTrace) {
  auto cfg = quick(0);
  cfg.restarts = 1;
  cfg.energy_cap = 1e-6;
  const auto res = search_sup(cfg);
  EXPECT_EQ(res.best().status, SearchStatus::hit_cap);
}

TEST(Search, GeneralFieldsSearch) {
  auto cfg = quick(1);
  cfg.radial = false;
  cfg.restarts = 1;
  cfg.grid.t_nodes = 256;
  cfg.general_theta_nodes = 8;
  cfg.max_iters = 60;
  const auto res = search_sup(cfg);
  const auto& t = res.best();
  EXPECT_EQ(t.theta_nodes, 8);
  EXPECT_EQ(t.best.size(), std::size_t(256 * 8));
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GE(t.rows[i].value, t.rows[i - 1].value);
  EXPECT_GT(t.best_value(), t.rows.front().value);
}

TEST(Search, BoundedUnderLargerCap) {
  for (int n : {1, -2}) {
    auto cfg = quick(n);
    cfg.energy_cap = 20.0;
    const double a = search_sup(cfg).best().best_value();
    cfg.energy_cap = 200.0;
    const double b = search_sup(cfg).best().best_value();
    EXPECT_LE(b, a + 1e-6);
  }
}
