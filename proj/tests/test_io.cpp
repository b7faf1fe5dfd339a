#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "detbound/io.hpp"
#include "detbound/selftest.hpp"

using namespace detbound;
using io::json;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(DETBOUND_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int raw = pclose(p);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "detbound_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Io, RadialProfileJsonRoundTrip) {
  const TGrid g(30.0, 64);
  const auto f = RadialProfile::sample(g, [](double t) { return std::sin(t) * std::exp(-t * t / 50); });
  const auto back = io::radial_from_json(json::parse(io::to_json(f).dump()));
  ASSERT_EQ(back.size(), f.size());
  for (int j = 0; j < f.size(); ++j) EXPECT_EQ(back[j], f[j]);
}

TEST(Io, SphereFieldJsonRoundTrip) {
  const TGrid g(30.0, 32);
  std::mt19937_64 rng(1);
  const auto phi = selftest::random_field(g, 6, rng);
  const auto j = io::to_json(phi);
  EXPECT_EQ(j.at("values").size(), 32u);
  EXPECT_EQ(j.at("values")[0].size(), 6u);
  const auto back = io::sphere_from_json(json::parse(j.dump()));
  for (std::size_t i = 0; i < phi.values().size(); ++i) EXPECT_EQ(back.values()[i], phi.values()[i]);
}

TEST(Io, CsvWithHeaderAndErrors) {
  std::stringstream ok("s,value\n0,1\n0.5,2\n1,0\n");
  const auto g = io::half_line_from_csv(ok);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.values()[1], 2.0);
  std::stringstream bad("0,1\nx,2\n");
  EXPECT_THROW(io::half_line_from_csv(bad), std::invalid_argument);
  std::stringstream ragged("0,1\n1,2,3\n");
  EXPECT_THROW(io::half_line_from_csv(ragged), std::invalid_argument);
  std::stringstream empty("s,value\n");
  EXPECT_THROW(io::half_line_from_csv(empty), std::invalid_argument);
}

TEST(Io, CircleCsvOneOrTwoColumns) {
  std::stringstream one, two;
  two << "x,phi\n";
  for (int k = 0; k < 64; ++k) {
    one << std::cos(0.1 * k) << '\n';
    two << k / 64.0 << ',' << std::cos(0.1 * k) << '\n';
  }
  const auto a = io::circle_from_csv(one);
  const auto b = io::circle_from_csv(two);
  ASSERT_EQ(a.size(), 64u);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(a[k], b[k]);
}

TEST(Io, CoefficientSweepCsv) {
  std::ostringstream out;
  io::write_coefficient_sweep(out, 50);
  std::istringstream in(out.str());
  const auto rows = io::read_csv(in, 4);
  ASSERT_EQ(rows.size(), 50u);
  for (const auto& r : rows) EXPECT_GE(r[3], 0.0);
  EXPECT_EQ(rows[0][0], 1.0);
}

TEST(Cli, AnomalyClosedFormExample) {
  const auto r = run_cli("anomaly --n 0 --profile tanh --param 1 --radial");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j.at("total").get<double>(), -0.171894, 1e-6);
  EXPECT_EQ(j.at("n").get<int>(), 0);
  for (const char* k : {"energy_term", "linear_term", "h0_term", "h1_term", "grid_meta"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("grid_meta").at("t_nodes").get<int>(), 512);
}

TEST(Cli, GeneralAnomalyOfLiftedProfile) {
  const auto r = run_cli("--theta-nodes 8 anomaly --n 1 --profile bump --param 0.7 --param 1 --param 2");
  ASSERT_EQ(r.status, 0);
  const auto rad = run_cli("anomaly --n 1 --profile bump --param 0.7 --param 1 --param 2 --radial");
  EXPECT_NEAR(json::parse(r.out).at("total").get<double>(), json::parse(rad.out).at("total").get<double>(), 1e-9);
}

TEST(Cli, CoefficientSweep) {
  const auto r = run_cli("lemma3 --coefficient-sweep 1000");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  const auto rows = io::read_csv(in, 4);
  ASSERT_EQ(rows.size(), 1000u);
  for (const auto& row : rows) EXPECT_GE(row[3], 0.0);
}

TEST(Cli, Lemma3ReportFromCsv) {
  const auto path = scratch("u.csv");
  {
    std::ofstream f(path);
    f << "s,value\n";
    for (int k = 0; k <= 600; ++k) f << io::format_number(0.05 * k) << ',' << io::format_number(4.0 * (1.0 - std::exp(-0.05 * k))) << '\n';
  }
  const auto r = run_cli("lemma3 --input " + path.string() + " --M 3 --calibrate");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("M").get<int>(), 3);
  EXPECT_GE(j.at("slack").get<double>(), 0.0);
  EXPECT_EQ(j.at("x_points").size(), j.at("N").get<std::size_t>());
}

TEST(Cli, RearrangeAndEnvelope) {
  const auto path = scratch("g.csv");
  {
    std::ofstream f(path);
    f << "s,value\n0,1\n1,3\n2,2\n3,0\n";
  }
  auto r = run_cli("rearrange --input " + path.string());
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  const auto rows = io::read_csv(in, 2);
  EXPECT_EQ(rows[0][1], 3.0);
  EXPECT_EQ(rows[1][1], 2.0);
  EXPECT_EQ(rows[2][1], 1.0);
  r = run_cli("rearrange --envelope --input " + path.string());
  ASSERT_EQ(r.status, 0);
  std::istringstream in2(r.out);
  const auto env = io::read_csv(in2, 2);
  EXPECT_EQ(env.front()[1], 1.0);
  EXPECT_EQ(env.back()[1], 0.0);
}

TEST(Cli, CircleDeterminant) {
  const auto path = scratch("phi.csv");
  {
    std::ofstream f(path);
    for (int k = 0; k < 256; ++k) f << io::format_number(std::cos(2 * numerics::pi * k / 256.0)) << '\n';
  }
  const auto r = run_cli("circle-det --input " + path.string());
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(std::log(j.at("det").get<double>()), 2.0 * std::log(std::cyl_bessel_i(0.0, 1.0)), 1e-7);
  EXPECT_LT(std::abs(j.at("discrepancy").get<double>()), 1e-6);
}

TEST(Cli, MtCheck) {
  const auto r = run_cli("--theta-nodes 8 mt-check --profile tanh --param 1");
  ASSERT_EQ(r.status, 0);
  EXPECT_NEAR(json::parse(r.out).at("mt_deficit").get<double>(), -0.005228, 1e-5);
}

TEST(Cli, SearchIsByteIdentical) {
  const auto trace = scratch("trace.csv");
  const std::string args = "--t-nodes 256 search --n 1 --restarts 2 --seed 5 --trace " + trace.string();
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = json::parse(a.out);
  EXPECT_EQ(j.at("traces").size(), 2u);
  EXPECT_TRUE(j.contains("grid_meta"));
  std::ifstream t(trace);
  std::string header;
  std::getline(t, header);
  EXPECT_EQ(header, "iter,A,energy,gradnorm");
}

TEST(Cli, ConfigFileSetsGrid) {
  const auto path = scratch("cfg.json");
  {
    std::ofstream f(path);
    f << R"({"grid": {"t_nodes": 256, "T": 30}, "seed": 3})";
  }
  const auto r = run_cli("--config " + path.string() + " anomaly --n 0 --profile tanh --param 1 --radial");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("grid_meta").at("t_nodes").get<int>(), 256);
  EXPECT_EQ(j.at("grid_meta").at("T").get<double>(), 30.0);
}

TEST(Cli, ExitStatuses) {
  EXPECT_EQ(run_cli("").status, 2);
  EXPECT_EQ(run_cli("frobnicate").status, 2);
  EXPECT_EQ(run_cli("anomaly --profile tanh").status, 2);           // missing --n
  EXPECT_EQ(run_cli("anomaly --n 0 --profile nope").status, 2);      // unknown family
  EXPECT_EQ(run_cli("--t-nodes 3 anomaly --n 0").status, 2);         // bad grid
  const auto path = scratch("steep.csv");
  {
    std::ofstream f(path);
    for (int k = 0; k < 64; ++k) {
      const double t = -40.0 + 80.0 * k / 63.0;
      f << io::format_number(t) << ',' << 1.5 * std::abs(t) << '\n';
    }
  }
  EXPECT_EQ(run_cli("anomaly --n 0 --radial --input " + path.string()).status, 1);  // divergent weight
}
