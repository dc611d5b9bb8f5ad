#pragma once

// Batch driver: generate psi_free, iterate, and write field, report, summary
// and slice exports.

#include "mtve/config.hpp"
#include "mtve/free_solutions.hpp"
#include "mtve/grid.hpp"
#include "mtve/parallel.hpp"
#include "mtve/solvers.hpp"
#include "mtve/volterra.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace mtve {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_diverged = 2 };

struct RunOptions {
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
};

struct CausalityCheck {
  bool passed = true;
  double max_change = 0.0;
  int trials = 0;
};

struct RunResult {
  IterationReport report;
  double norm_free = 0.0;
  CausalityCheck causality;
  bool initial_slices_identical = false;
  int exit_code = exit_ok;
};

/// Bitwise equality of psi and psi_free on every slice with t1 = 0 or t2 = 0.
inline bool initial_slices_identical(const WaveField &psi, const WaveField &free) {
  const auto &g = psi.spec();
  for (int a = 0; a < g.nt; ++a)
    for (int b = 0; b < g.nt; ++b) {
      if (a != 0 && b != 0)
        continue;
      const auto s1 = psi.slice(a, b), s2 = free.slice(a, b);
      if (std::memcmp(s1.data(), s2.data(), s1.size_bytes()) != 0)
        return false;
    }
  return true;
}

/// Output value at one point, evaluated pointwise where the operator allows.
inline cplx operator_at(const GridSpec &g, const SolverConfig &cfg, const WaveField &psi, int it1,
                        std::size_t ix1, int it2, std::size_t ix2) {
  if (cfg.dimension == 3 && cfg.kernel.family == KernelFamily::inverse_distance_3d)
    return make_operator_3d_singular(g, cfg).at(psi, it1, ix1, it2, ix2).value;
  if (cfg.dimension == 2 && cfg.kernel.family == KernelFamily::alpha_power_2d)
    return make_operator_2d_alpha(g, cfg).at(psi, it1, ix1, it2, ix2).value;
  return make_operator(g, cfg)(psi)[g.index(it1, it2, ix1, ix2)];
}

/// Perturbs psi at points outside the probe's past cone (same time slice at
/// a different position, and a later time slice) and measures the change of
/// the output at the probe.
inline CausalityCheck causality_spot_check(const GridSpec &g, const SolverConfig &cfg,
                                           const WaveField &psi) {
  CausalityCheck chk;
  const int it = std::max(1, g.nt - 2);
  const std::size_t centre = g.points_per_particle() / 2;
  const cplx base = operator_at(g, cfg, psi, it, centre, it, centre);
  const std::size_t neighbour = centre == 0 ? 1 : centre - 1;
  struct Trial {
    int t1;
    std::size_t x1;
  };
  std::vector<Trial> trials = {{it, neighbour}};
  if (it + 1 < g.nt)
    trials.push_back({it + 1, centre});
  for (const auto &tr : trials) {
    WaveField p = psi;
    p.at(tr.t1, it, tr.x1, centre) += cplx(1.0, -1.0);
    const cplx v = operator_at(g, cfg, p, it, centre, it, centre);
    chk.max_change = std::max(chk.max_change, std::abs(v - base));
    ++chk.trials;
  }
  chk.passed = chk.max_change <= 1e-14;
  return chk;
}

inline std::string slice_export_path(const std::string &field_path, const SliceExport &s) {
  std::string p = field_path + ".slice_t2-" + std::to_string(s.t2) + "_x2";
  for (int v : s.x2)
    p += "-" + std::to_string(v);
  return p + ".csv";
}

inline void write_summary(const RunConfig &c, const RunResult &r, std::ostream &os) {
  os << "status: " << to_string(r.report.status) << "\n";
  os << std::setprecision(10);
  os << "final_residual: " << r.report.final_residual << "\n";
  os << "iterations: " << r.report.iterations() << "\n";
  os << "norm_free: " << r.norm_free << "\n";
  os << "dimension: " << c.grid.dimension << "\n";
  os << "kernel: " << to_string(c.solver.kernel.family) << "\n";
  os << "lambda: " << c.solver.lambda << "\n";
  os << "causality_check: " << (r.causality.passed ? "pass" : "fail")
     << " (trials " << r.causality.trials << ", max change " << r.causality.max_change << ")\n";
  os << "initial_slice_check: " << (r.initial_slices_identical ? "pass" : "fail") << "\n";
  os << "\n" << std::left << std::setw(4) << "n" << ' ' << std::setw(18) << "phi_norm" << ' '
     << std::setw(18) << "bound" << ' ' << "ratio\n";
  for (const auto &rec : r.report.records) {
    const double ratio = rec.bound > 0.0 ? rec.phi_norm / rec.bound : (rec.phi_norm == 0.0 ? 0.0 : INFINITY);
    os << std::setw(4) << rec.n << ' ' << std::setw(18) << rec.phi_norm << ' ' << std::setw(18)
       << rec.bound << ' ' << ratio << "\n";
  }
}

/// Runs a validated configuration and writes all outputs.
inline RunResult run_config(RunConfig c, const RunOptions &opt = {}) {
  if (opt.seed_override)
    c.solver.mc_seed = *opt.seed_override;
  set_num_threads(opt.threads);
  const auto &g = c.grid;

  const WaveField free = generate_free(c.free, g);
  if (!c.outputs.free_field_path.empty())
    write_field(free, c.outputs.free_field_path);

  RunResult res;
  res.norm_free = banach_norm(free);
  const auto op = make_operator(g, c.solver);
  PicardOptions po;
  po.tol = c.solver.tol;
  po.max_iter = c.solver.max_iter;
  const double nf = res.norm_free;
  const auto solver = c.solver;
  po.bound = [solver, nf, T = g.T](int n) { return bound_for(solver, n, nf, T); };
  auto sol = picard_solve(op, free, [](const WaveField &f) { return banach_norm(f); }, po);
  res.report = sol.report;

  res.causality = causality_spot_check(g, c.solver, free);
  res.initial_slices_identical = initial_slices_identical(sol.solution, free);

  write_field(sol.solution, c.outputs.field_path);
  {
    std::ofstream os(c.outputs.report_path);
    if (!os)
      throw std::runtime_error("cannot write " + c.outputs.report_path);
    write_report_csv(res.report, os);
  }
  if (!c.outputs.slice_exports.empty()) {
    const WaveField stored = read_field(c.outputs.field_path);
    for (const auto &s : c.outputs.slice_exports) {
      std::ofstream os(slice_export_path(c.outputs.field_path, s));
      if (!os)
        throw std::runtime_error("cannot write slice export");
      write_slice_csv(stored, s.t2, g.flatten(s.x2), os);
    }
  }
  {
    std::ofstream os(c.outputs.summary_path);
    if (!os)
      throw std::runtime_error("cannot write " + c.outputs.summary_path);
    write_summary(c, res, os);
  }
  res.exit_code = res.report.status == IterationStatus::diverged ? exit_diverged : exit_ok;
  return res;
}

} // namespace mtve
