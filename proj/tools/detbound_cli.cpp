// detbound: command-line front end.
//
//   detbound [--config FILE] [--out FILE] [grid flags] <subcommand> [options]
//
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "detbound/detbound.hpp"
#include "detbound/io.hpp"
#include "detbound/selftest.hpp"

namespace {

using detbound::io::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  std::string path;

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open output file " + path);
    f << text;
  }

  void write(const json& j) const { write(j.dump(2) + "\n"); }
};

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open input file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool looks_like_json(const std::string& text) {
  const auto p = text.find_first_not_of(" \t\r\n");
  return p != std::string::npos && text[p] == '{';
}

struct GridFlags {
  double T = 0;
  int t_nodes = 0, theta_nodes = 0, stencil_pairs = 0, circle_nodes = 0;
  CLI::Option *oT = nullptr, *ot = nullptr, *oth = nullptr, *os = nullptr, *oc = nullptr;

  void add(CLI::App& app) {
    oT = app.add_option("--T", T, "half width of the t window");
    ot = app.add_option("--t-nodes", t_nodes, "nodes in t");
    oth = app.add_option("--theta-nodes", theta_nodes, "nodes in the angle");
    os = app.add_option("--stencil-pairs", stencil_pairs, "energy stencil half width");
    oc = app.add_option("--circle-nodes", circle_nodes, "samples of a circle metric");
  }

  detbound::GridConfig apply(detbound::GridConfig g) const {
    if (oT->count()) g.T = T;
    if (ot->count()) g.t_nodes = t_nodes;
    if (oth->count()) g.theta_nodes = theta_nodes;
    if (os->count()) g.stencil_pairs = stencil_pairs;
    if (oc->count()) g.circle_nodes = circle_nodes;
    g.validate();
    return g;
  }
};

detbound::RadialProfile load_profile(const std::string& input, const std::string& family,
                                     const std::vector<double>& params, const detbound::GridConfig& g) {
  if (!input.empty()) {
    const std::string text = slurp(input);
    if (looks_like_json(text)) return detbound::io::radial_from_json(json::parse(text), g.stencil_pairs);
    std::stringstream ss(text);
    return detbound::io::radial_from_csv(ss, g.stencil_pairs);
  }
  return detbound::profile_family(family, params, detbound::TGrid(g), g.stencil_pairs);
}

json profile_meta(const std::string& input, const std::string& family, const std::vector<double>& params) {
  if (!input.empty()) return json{{"input", input}};
  return json{{"family", family}, {"params", params}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal anomaly of determinants of Laplacians on P^1 and the circle"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  GridFlags grid_flags;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "write the result here instead of stdout");
  grid_flags.add(app);

  // anomaly
  auto* anomaly = app.add_subcommand("anomaly", "evaluate the anomaly A(phi) on O(n)");
  int n = 0;
  bool radial = false;
  std::string profile = "zero", input;
  std::vector<double> params;
  anomaly->add_option("--n", n, "degree of the line bundle")->required();
  anomaly->add_option("--profile", profile, "probe family: zero, tanh, bump, tent, fourier, conformal");
  anomaly->add_option("--param", params, "family parameters (repeatable)");
  anomaly->add_option("--input", input, "profile (CSV t,f or JSON) or field (JSON) instead of a family");
  anomaly->add_flag("--radial", radial, "use the rotation-invariant formula");

  // lemma3
  auto* lemma3 = app.add_subcommand("lemma3", "constants and end-to-end check of the half-line estimate");
  std::int64_t sweep = 0, M = 1;
  bool calibrate = false, l3_envelope = false;
  std::string l3_input;
  lemma3->add_option("--coefficient-sweep", sweep, "emit N,coefficient,bound,margin for N = 1..count");
  lemma3->add_option("--input", l3_input, "CSV s,value of u");
  lemma3->add_option("--M", M, "number of exponential terms minus one");
  lemma3->add_flag("--calibrate", calibrate, "compute the constant C from the stationary profile");
  lemma3->add_flag("--envelope", l3_envelope, "replace the input by its monotone envelope first");

  // rearrange
  auto* rearrange = app.add_subcommand("rearrange", "nonincreasing rearrangement on the half line");
  std::string r_input;
  bool envelope = false;
  rearrange->add_option("--input", r_input, "CSV s,value")->required();
  rearrange->add_flag("--envelope", envelope, "emit u = f(0) + int (f')^* instead of the rearrangement of f");

  // mt-check
  auto* mt = app.add_subcommand("mt-check", "Moser-Trudinger deficit and Fontana functional");
  std::string mt_profile = "tanh", mt_input;
  std::vector<double> mt_params{1.0};
  mt->add_option("--profile", mt_profile, "radial probe family, lifted to the sphere");
  mt->add_option("--param", mt_params, "family parameters (repeatable)");
  mt->add_option("--input", mt_input, "field JSON {t_grid, theta_nodes, values} or radial profile");

  // circle-det
  auto* circle = app.add_subcommand("circle-det", "det' of the Laplacian of a metric on the circle");
  std::string c_input;
  circle->add_option("--input", c_input, "CSV of phi samples at x_k = k/n (or x,phi)")->required();

  // search
  auto* search = app.add_subcommand("search", "search for sup A(phi)");
  detbound::SearchConfig scfg;
  bool general = false;
  std::string trace_path;
  auto* o_n = search->add_option("--n", scfg.n, "degree of the line bundle");
  auto* o_restarts = search->add_option("--restarts", scfg.restarts, "independent restarts");
  auto* o_seed = search->add_option("--seed", scfg.seed, "random seed");
  auto* o_iters = search->add_option("--max-iters", scfg.max_iters, "iteration limit per restart");
  auto* o_cap = search->add_option("--energy-cap", scfg.energy_cap, "abort a trace above this energy");
  auto* o_general = search->add_flag("--general", general, "search over non-radial fields");
  search->add_option("--trace", trace_path, "write the best trace as CSV iter,A,energy,gradnorm");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Output out{out_path};
  try {
    json config = json::object();
    if (!config_path.empty()) config = json::parse(slurp(config_path));
    detbound::GridConfig grid =
        config.contains("grid") ? detbound::io::grid_from_json(config.at("grid")) : detbound::GridConfig{};
    grid = grid_flags.apply(grid);
    const std::uint64_t seed = config.value("seed", std::uint64_t{20240611});

    if (*anomaly) {
      json result;
      bool field_input = false;
      json field_json;
      if (!input.empty()) {
        const std::string text = slurp(input);
        if (looks_like_json(text)) {
          field_json = json::parse(text);
          field_input = field_json.contains("theta_nodes");
        }
      }
      if (field_input) {
        if (radial) throw UsageError("--radial needs a radial profile, got a field");
        const auto phi = detbound::io::sphere_from_json(field_json, grid.stencil_pairs);
        result = detbound::io::to_json(detbound::anomaly_general(phi, n), grid);
      } else {
        const auto f = load_profile(input, profile, params, grid);
        const auto r = radial ? detbound::anomaly_radial(f, n)
                              : detbound::anomaly_general(detbound::lift(f, grid.theta_nodes), n);
        result = detbound::io::to_json(r, grid);
      }
      result["radial"] = radial;
      result["profile"] = profile_meta(input, profile, params);
      out.write(result);
      return 0;
    }

    if (*lemma3) {
      if (lemma3->count("--coefficient-sweep")) {
        std::ostringstream csv;
        detbound::io::write_coefficient_sweep(csv, sweep);
        out.write(csv.str());
        return 0;
      }
      if (l3_input.empty()) throw UsageError("lemma3 needs --coefficient-sweep or --input");
      std::stringstream ss(slurp(l3_input));
      auto u = detbound::io::half_line_from_csv(ss);
      if (l3_envelope) u = detbound::monotone_envelope(u);
      const double C = calibrate ? detbound::lemma3_calibration(M) : 0.0;
      out.write(detbound::io::to_json(detbound::lemma3_report(u, M, C)));
      return 0;
    }

    if (*rearrange) {
      std::stringstream ss(slurp(r_input));
      const auto g = detbound::io::half_line_from_csv(ss);
      std::ostringstream csv;
      detbound::io::write_half_line_csv(csv, envelope ? detbound::monotone_envelope(g)
                                                      : detbound::decreasing_rearrangement(g));
      out.write(csv.str());
      return 0;
    }

    if (*mt) {
      detbound::SphereField phi = [&] {
        if (!mt_input.empty()) {
          const std::string text = slurp(mt_input);
          if (looks_like_json(text)) {
            const auto j = json::parse(text);
            if (j.contains("theta_nodes")) return detbound::io::sphere_from_json(j, grid.stencil_pairs);
          }
        }
        return detbound::lift(load_profile(mt_input, mt_profile, mt_params, grid), grid.theta_nodes);
      }();
      const auto fon = detbound::fontana_functional(phi);
      out.write(json{{"mt_deficit", detbound::mt_deficit(phi)},
                     {"fontana", {{"value", fon.value},
                                  {"removed_mean", fon.removed_mean},
                                  {"scale", fon.scale},
                                  {"energy", fon.energy}}},
                     {"profile", profile_meta(mt_input, mt_profile, mt_params)},
                     {"grid_meta", detbound::io::grid_meta(grid)}});
      return 0;
    }

    if (*circle) {
      std::stringstream ss(slurp(c_input));
      const auto phi = detbound::io::circle_from_csv(ss);
      const auto& solver = detbound::default_monodromy_solver();
      const double det = solver.det(phi);
      const double formula = detbound::circle_anomaly_formula(phi);
      out.write(json{{"det", det},
                     {"log_det", std::log(det)},
                     {"anomaly_formula", formula},
                     {"discrepancy", std::log(det) - formula},
                     {"calibration", solver.calibration()},
                     {"samples", phi.size()},
                     {"rel_tol", solver.options().rel_tol}});
      return 0;
    }

    if (*search) {
      detbound::SearchConfig cfg;
      if (config.contains("search")) {
        const auto& s = config.at("search");
        cfg.n = s.value("n", cfg.n);
        cfg.radial = s.value("radial", cfg.radial);
        cfg.max_iters = s.value("max_iters", cfg.max_iters);
        cfg.armijo = s.value("armijo", cfg.armijo);
        cfg.backtrack = s.value("backtrack", cfg.backtrack);
        cfg.max_backtracks = s.value("max_backtracks", cfg.max_backtracks);
        cfg.initial_step = s.value("initial_step", cfg.initial_step);
        cfg.mass = s.value("mass", cfg.mass);
        cfg.energy_cap = s.value("energy_cap", cfg.energy_cap);
        cfg.plateau_tol = s.value("plateau_tol", cfg.plateau_tol);
        cfg.plateau_window = s.value("plateau_window", cfg.plateau_window);
        cfg.grad_tol = s.value("grad_tol", cfg.grad_tol);
        cfg.restarts = s.value("restarts", cfg.restarts);
        cfg.init_amplitude = s.value("init_amplitude", cfg.init_amplitude);
        cfg.general_theta_nodes = s.value("general_theta_nodes", cfg.general_theta_nodes);
      }
      cfg.seed = seed;
      if (o_n->count()) cfg.n = scfg.n;
      if (o_restarts->count()) cfg.restarts = scfg.restarts;
      if (o_seed->count()) cfg.seed = scfg.seed;
      if (o_iters->count()) cfg.max_iters = scfg.max_iters;
      if (o_cap->count()) cfg.energy_cap = scfg.energy_cap;
      if (o_general->count()) cfg.radial = !general;
      cfg.grid = grid;
      const auto res = detbound::search_sup(cfg);
      if (!trace_path.empty()) {
        std::ostringstream csv;
        detbound::io::write_trace_csv(csv, res.best());
        Output{trace_path}.write(csv.str());
      }
      out.write(detbound::io::search_summary(cfg, res));
      return 0;
    }

    if (*selftest) {
      detbound::selftest::Options opt;
      opt.grid = grid;
      opt.seed = seed;
      std::ostringstream text;
      bool all = true;
      detbound::selftest::run(opt, [&](const detbound::selftest::Outcome& r) {
        detbound::selftest::print(std::cerr, r);
        detbound::selftest::print(text, r);
        all = all && r.pass;
      });
      if (!out_path.empty()) out.write(text.str());
      return all ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "usage error: malformed JSON: " << e.what() << '\n';
    return 2;
  } catch (const detbound::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
