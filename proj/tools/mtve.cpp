// mtve: batch front end.
//
//   mtve run <config>
//   mtve validate <config>
//   mtve export-slice <field.bin> --t2 <i> --x2 <i...> --out <csv>
//
// Exit codes: 0 success, 1 configuration error, 2 solver divergence.

#include "mtve/mtve.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int cmd_validate(const std::string &path) {
  const auto parsed = mtve::load_config(path);
  for (const auto &d : parsed.diagnostics)
    std::cout << d << "\n";
  return parsed.diagnostics.empty() ? mtve::exit_ok : mtve::exit_config;
}

int cmd_run(const std::string &path, const mtve::RunOptions &opt) {
  const auto parsed = mtve::load_config(path);
  if (!parsed.diagnostics.empty()) {
    for (const auto &d : parsed.diagnostics)
      std::cerr << "config error: " << d << "\n";
    return mtve::exit_config;
  }
  const auto res = mtve::run_config(parsed.config, opt);
  const auto &rep = res.report;
  std::cout << "status " << mtve::to_string(rep.status) << ", " << rep.iterations()
            << " iterations, residual " << rep.final_residual << "\n";
  if (res.exit_code == mtve::exit_diverged)
    std::cerr << "solver diverged: iterate norms exceeded the theoretical bound\n";
  return res.exit_code;
}

int cmd_export(const std::string &field_path, int t2, const std::vector<int> &x2,
               const std::string &out) {
  const auto f = mtve::read_field(field_path);
  const auto &g = f.spec();
  if (static_cast<int>(x2.size()) != g.dimension) {
    std::cerr << "--x2 needs " << g.dimension << " indices\n";
    return mtve::exit_config;
  }
  for (int v : x2)
    if (v < 0 || v >= g.nx) {
      std::cerr << "--x2 index out of range\n";
      return mtve::exit_config;
    }
  std::ofstream os(out);
  if (!os) {
    std::cerr << "cannot write " << out << "\n";
    return mtve::exit_config;
  }
  mtve::write_slice_csv(f, t2, g.flatten(x2), os);
  return mtve::exit_ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multi-time Volterra integral equation solver"};
  app.require_subcommand(1);

  mtve::RunOptions opt;
  std::uint64_t seed = 0;
  app.add_option("--threads", opt.threads, "worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  auto *seed_opt = app.add_option("--seed-override", seed, "replace solver.mc_seed");

  std::string config;
  auto *run = app.add_subcommand("run", "solve the configured problem and write outputs");
  run->add_option("config", config, "configuration file")->required();
  auto *validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("config", config, "configuration file")->required();

  std::string field, out;
  int t2 = 0;
  std::vector<int> x2;
  auto *exp = app.add_subcommand("export-slice", "write psi(t1, x1; t2, x2) as CSV");
  exp->add_option("field", field, "binary field file")->required();
  exp->add_option("--t2", t2, "time index of particle 2")->required();
  exp->add_option("--x2", x2, "spatial indices of particle 2")->required();
  exp->add_option("--out", out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mtve::exit_config;
  }
  if (*seed_opt)
    opt.seed_override = seed;

  try {
    if (*run)
      return cmd_run(config, opt);
    if (*validate)
      return cmd_validate(config);
    return cmd_export(field, t2, x2, out);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return mtve::exit_config;
  }
}
