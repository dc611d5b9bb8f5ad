#pragma once

// Independent references: dense direct solves, closed-form first iterates and
// recorded high-sample Monte Carlo values loaded from fixture files.

#include "mtve/config.hpp"
#include "mtve/solvers.hpp"
#include "mtve/volterra.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <string>

namespace mtve {

/// Solves (I - A) psi = psi_free with the assembled d = 1 operator.
inline WaveField dense_reference_1d(const SolverConfig &cfg, const GridSpec &g,
                                    const WaveField &psi_free) {
  if (g.size() > direct_solve_max_points)
    throw SizeGuardError("dense_reference_1d: nt^2 nx^2 = " + std::to_string(g.size()) +
                         " exceeds " + std::to_string(direct_solve_max_points));
  if (!(psi_free.spec() == g))
    throw ShapeError("dense_reference_1d: psi_free is on a different grid");
  const auto op = make_operator_1d(g, cfg);
  return direct_solve(op, psi_free);
}

/// First iterate for psi = 1, K = 1, m = 0 in any dimension: lambda (t1 t2)^2 / 4.
inline double closed_form_first_iterate(int dimension, double lambda, double t1, double t2) {
  if (dimension < 1 || dimension > 3)
    throw std::invalid_argument("closed_form_first_iterate: dimension must be 1, 2 or 3");
  return lambda * (t1 * t1) * (t2 * t2) / 4.0;
}

/// d = 3 inverse-distance operator on psi = 1 with constant f at x1 = x2,
/// t1 = t2 = tau (cones inside the box): lambda f tau^3 / 3.
inline double closed_form_singular_3d(double lambda, double f, double tau) {
  return lambda * f * tau * tau * tau / 3.0;
}

struct OracleFixture {
  std::string name;
  std::string method; // "closed_form" or "monte_carlo"
  std::string description;
  GridSpec grid;
  SolverConfig solver;
  int it1 = 0, it2 = 0;
  std::size_t ix1 = 0, ix2 = 0;
  cplx value;
  double std_error = 0.0;
  double tolerance_sigma = 3.0;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
};

inline OracleFixture load_fixture(const std::string &path) {
  boost::property_tree::ptree pt;
  boost::property_tree::ini_parser::read_ini(path, pt);

  // Grid and solver sections share the run-config schema.
  boost::property_tree::ptree run;
  for (const char *sec : {"grid", "solver"})
    if (auto c = pt.get_child_optional(sec))
      run.put_child(sec, *c);
  run.put("outputs.field_path", "unused");
  run.put("outputs.report_path", "unused");
  run.put("outputs.summary_path", "unused");
  auto parsed = parse_config_tree(run);
  std::vector<std::string> errs;
  for (const auto &d : parsed.diagnostics)
    if (d.rfind("grid: box_halfwidth", 0) != 0 && d.rfind("outputs", 0) != 0 &&
        d.rfind("free:", 0) != 0)
      errs.push_back(d);
  if (!errs.empty())
    throw ConfigError(path + ": " + errs.front());

  OracleFixture f;
  f.grid = parsed.config.grid;
  f.solver = parsed.config.solver;
  f.name = pt.get<std::string>("fixture.name");
  f.method = pt.get<std::string>("fixture.method");
  f.description = pt.get<std::string>("fixture.description", "");
  auto axes = [&](const std::string &key) {
    std::vector<int> a;
    for (const auto &s : detail::split(pt.get<std::string>(key), ','))
      a.push_back(std::stoi(s));
    if (static_cast<int>(a.size()) != f.grid.dimension)
      throw ConfigError(path + ": " + key + " needs one index per axis");
    return f.grid.flatten(a);
  };
  f.it1 = pt.get<int>("probe.it1");
  f.it2 = pt.get<int>("probe.it2");
  f.ix1 = axes("probe.ix1");
  f.ix2 = axes("probe.ix2");
  f.value = {pt.get<double>("reference.value_re"), pt.get<double>("reference.value_im", 0.0)};
  f.std_error = pt.get<double>("reference.std_error", 0.0);
  f.tolerance_sigma = pt.get<double>("reference.tolerance_sigma", 3.0);
  f.seed = pt.get<std::uint64_t>("reference.seed", 0);
  f.samples = pt.get<std::uint64_t>("reference.samples", 0);
  return f;
}

} // namespace mtve
