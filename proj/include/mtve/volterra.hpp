#pragma once

// Generic multi-time Volterra equations
//   f(t,x) = f0(t,x) + int_0^{t_1} ... int_0^{t_N} dt' int dx' L(t,x;t',x') f(t',x')
// with N time and M space coordinates, their Picard (Neumann) iteration, and a
// dense direct solve used as a reference.

#include "mtve/errors.hpp"
#include "mtve/grid.hpp"
#include "mtve/parallel.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace mtve {

// ---- generic grids and fields ---------------------------------------------

struct GenericGrid {
  int N = 1;   // time dimensions
  int M = 0;   // space dimensions
  double T = 1.0;
  int nt = 2;
  double L = 1.0; // spatial box [-L, L]^M
  int nx = 2;

  double dt() const { return T / (nt - 1); }
  double dx() const { return 2.0 * L / (nx - 1); }
  std::size_t time_points() const { return ipow(nt, N); }
  std::size_t space_points() const { return ipow(nx, M); }
  std::size_t size() const { return time_points() * space_points(); }

  void validate() const {
    if (N < 1 || M < 0 || nt < 2 || !(T > 0.0) || (M > 0 && (nx < 2 || !(L > 0.0))))
      throw std::invalid_argument("GenericGrid: invalid parameters");
  }

  /// Multi-indices of a flattened time or space index (first axis slowest).
  void unflatten(std::size_t idx, int n, int dims, std::span<int> out) const {
    for (int k = dims - 1; k >= 0; --k) {
      out[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(n));
      idx /= static_cast<std::size_t>(n);
    }
  }

  friend bool operator==(const GenericGrid &, const GenericGrid &) = default;

private:
  static std::size_t ipow(int b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i)
      r *= static_cast<std::size_t>(b);
    return r;
  }
};

/// Time-major field on a GenericGrid: index = it_flat * space_points + ix_flat.
struct GenericField {
  GenericGrid grid;
  std::vector<cplx> data;

  GenericField() = default;
  explicit GenericField(const GenericGrid &g, cplx fill = {}) : grid(g), data(g.size(), fill) {
    g.validate();
  }

  std::size_t size() const { return data.size(); }
  std::span<cplx> values() { return data; }
  std::span<const cplx> values() const { return data; }
  cplx &operator[](std::size_t i) { return data[i]; }
  const cplx &operator[](std::size_t i) const { return data[i]; }
};

using GenericKernelFn = std::function<cplx(std::span<const double> t, std::span<const double> x,
                                           std::span<const double> tp,
                                           std::span<const double> xp)>;

struct GenericKernel {
  int N = 1;
  int M = 0;
  GenericKernelFn evaluator;
};

namespace detail {

struct GenericCoords {
  std::vector<double> t, x; // flattened: point * dims + axis
  std::vector<int> ti;      // time multi-indices
  std::vector<double> wx;   // spatial trapezoid weights
};

inline GenericCoords generic_coords(const GenericGrid &g) {
  GenericCoords c;
  const std::size_t NT = g.time_points(), NX = g.space_points();
  c.t.resize(NT * static_cast<std::size_t>(g.N));
  c.ti.resize(NT * static_cast<std::size_t>(g.N));
  for (std::size_t i = 0; i < NT; ++i) {
    std::span<int> idx(c.ti.data() + i * static_cast<std::size_t>(g.N),
                       static_cast<std::size_t>(g.N));
    g.unflatten(i, g.nt, g.N, idx);
    for (int k = 0; k < g.N; ++k)
      c.t[i * static_cast<std::size_t>(g.N) + static_cast<std::size_t>(k)] =
          idx[static_cast<std::size_t>(k)] * g.dt();
  }
  c.x.resize(NX * static_cast<std::size_t>(g.M));
  c.wx.assign(NX, 1.0);
  std::vector<int> idx(static_cast<std::size_t>(std::max(g.M, 1)));
  for (std::size_t i = 0; i < NX; ++i) {
    g.unflatten(i, g.nx, g.M, idx);
    for (int k = 0; k < g.M; ++k) {
      const int j = idx[static_cast<std::size_t>(k)];
      c.x[i * static_cast<std::size_t>(g.M) + static_cast<std::size_t>(k)] = -g.L + j * g.dx();
      c.wx[i] *= (j == 0 || j == g.nx - 1) ? 0.5 * g.dx() : g.dx();
    }
  }
  return c;
}

inline std::span<const double> row(const std::vector<double> &v, std::size_t i, int dims) {
  return {v.data() + i * static_cast<std::size_t>(dims), static_cast<std::size_t>(dims)};
}

} // namespace detail

/// Trapezoid in every time axis over the sub-grid [0, t_i] (endpoint weights
/// dt/2 at t' = 0 and at t' = t_i) and over the whole spatial box.
inline GenericField apply_generic(const GenericKernel &kernel, const GenericField &f) {
  const auto &g = f.grid;
  if (kernel.N != g.N || kernel.M != g.M)
    throw ShapeError("apply_generic: kernel and field dimensions differ");
  if (f.size() != g.size())
    throw ShapeError("apply_generic: field size does not match its grid");
  GenericField out(g);
  if (!kernel.evaluator)
    return out;
  const auto c = detail::generic_coords(g);
  const std::size_t NT = g.time_points(), NX = g.space_points();
  const double h = g.dt();
  parallel_for(g.size(), [&](std::size_t p) {
    const std::size_t it = p / NX, ix = p % NX;
    const int *ti = c.ti.data() + it * static_cast<std::size_t>(g.N);
    for (int k = 0; k < g.N; ++k)
      if (ti[k] == 0)
        return;
    cplx acc{};
    for (std::size_t jt = 0; jt < NT; ++jt) {
      const int *tj = c.ti.data() + jt * static_cast<std::size_t>(g.N);
      double wt = 1.0;
      for (int k = 0; k < g.N && wt != 0.0; ++k) {
        if (tj[k] > ti[k])
          wt = 0.0;
        else
          wt *= (tj[k] == 0 || tj[k] == ti[k]) ? 0.5 * h : h;
      }
      if (wt == 0.0)
        continue;
      for (std::size_t jx = 0; jx < NX; ++jx) {
        const cplx v = f[jt * NX + jx];
        if (v == cplx{})
          continue;
        acc += wt * c.wx[jx] *
               kernel.evaluator(detail::row(c.t, it, g.N), detail::row(c.x, ix, g.M),
                                detail::row(c.t, jt, g.N), detail::row(c.x, jx, g.M)) *
               v;
      }
    }
    out[p] = acc;
  });
  return out;
}

/// max over time pairs (t, t') of (int dx dx' |L|^2)^{1/2}, trapezoid in space.
inline double kernel_operator_norm(const GenericKernel &kernel, const GenericGrid &g) {
  g.validate();
  if (kernel.N != g.N || kernel.M != g.M)
    throw ShapeError("kernel_operator_norm: dimension mismatch");
  if (!kernel.evaluator)
    return 0.0;
  const auto c = detail::generic_coords(g);
  const std::size_t NT = g.time_points(), NX = g.space_points();
  std::vector<double> pair_norm(NT * NT, 0.0);
  parallel_for(NT * NT, [&](std::size_t q) {
    const std::size_t it = q / NT, jt = q % NT;
    double acc = 0.0;
    for (std::size_t ix = 0; ix < NX; ++ix)
      for (std::size_t jx = 0; jx < NX; ++jx) {
        const cplx v = kernel.evaluator(detail::row(c.t, it, g.N), detail::row(c.x, ix, g.M),
                                        detail::row(c.t, jt, g.N), detail::row(c.x, jx, g.M));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          acc = std::numeric_limits<double>::quiet_NaN();
        acc += c.wx[ix] * c.wx[jx] * std::norm(v);
      }
    pair_norm[q] = acc;
  });
  double m = 0.0;
  for (double v : pair_norm) {
    if (std::isnan(v))
      throw std::domain_error("kernel_operator_norm: non-finite kernel sample");
    m = std::max(m, v);
  }
  return std::sqrt(m);
}

/// ||f0|| ||L||^n T^{nN} / (n!)^{N/2}.
inline double generic_bound(int n, double norm_f0, double norm_L, double T, int N) {
  if (n < 0)
    throw std::invalid_argument("generic_bound: n >= 0 required");
  if (n == 0)
    return norm_f0;
  if (norm_f0 == 0.0 || norm_L == 0.0)
    return 0.0;
  const double lg = n * std::log(norm_L) + n * N * std::log(T) - 0.5 * N * std::lgamma(n + 1.0);
  return norm_f0 * std::exp(lg);
}

/// Slice norms ||f(t, .)||_{L2} for every time multi-index.
inline std::vector<double> generic_slice_norms(const GenericField &f) {
  const auto &g = f.grid;
  const auto c = detail::generic_coords(g);
  const std::size_t NT = g.time_points(), NX = g.space_points();
  std::vector<double> out(NT);
  for (std::size_t it = 0; it < NT; ++it) {
    double acc = 0.0;
    for (std::size_t ix = 0; ix < NX; ++ix)
      acc += c.wx[ix] * std::norm(f[it * NX + ix]);
    out[it] = std::sqrt(acc);
  }
  return out;
}

inline double generic_banach_norm(const GenericField &f) {
  double m = 0.0;
  for (double v : generic_slice_norms(f)) {
    if (std::isnan(v))
      return v;
    m = std::max(m, v);
  }
  return m;
}

/// Checks ||f(t, .)|| <= slack * ||f0|| * exp(||L|| t_1 ... t_N) on every slice.
inline bool growth_envelope_check(const GenericField &f, double norm_f0, double norm_L,
                                  double slack = 1.2) {
  const auto &g = f.grid;
  const auto norms = generic_slice_norms(f);
  std::vector<int> idx(static_cast<std::size_t>(g.N));
  for (std::size_t it = 0; it < norms.size(); ++it) {
    g.unflatten(it, g.nt, g.N, idx);
    double prod = 1.0;
    for (int k : idx)
      prod *= k * g.dt();
    if (norms[it] > slack * norm_f0 * std::exp(norm_L * prod))
      return false;
  }
  return true;
}

// ---- iteration reports ----------------------------------------------------

enum class IterationStatus { converged, max_iter, diverged };

inline std::string_view to_string(IterationStatus s) {
  switch (s) {
  case IterationStatus::converged: return "converged";
  case IterationStatus::max_iter: return "max_iter";
  case IterationStatus::diverged: return "diverged";
  }
  return "unknown";
}

struct IterationRecord {
  int n = 0;
  double phi_norm = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
};

struct IterationReport {
  std::vector<IterationRecord> records;
  IterationStatus status = IterationStatus::max_iter;
  double final_residual = std::numeric_limits<double>::quiet_NaN();

  /// Number of operator applications in the iteration proper.
  int iterations() const { return records.empty() ? 0 : records.back().n; }
};

inline void write_report_csv(const IterationReport &r, std::ostream &os) {
  os << "n,phi_norm,bound,residual,wall_time_s\n";
  const auto old = os.precision(17);
  for (const auto &rec : r.records)
    os << rec.n << ',' << rec.phi_norm << ',' << rec.bound << ',' << rec.residual << ','
       << rec.wall_time_s << '\n';
  os.precision(old);
}

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 60;
  std::function<double(int)> bound; // theoretical bound on ||phi_n||
  double divergence_factor = 1e3;
  int divergence_patience = 3;
};

template <class Field> struct PicardResult {
  Field solution;
  IterationReport report;
};

namespace detail {
template <class Field> void accumulate(Field &f, const Field &phi) {
  auto out = f.values();
  auto in = phi.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (in[i] != cplx{})
      out[i] += in[i];
}

template <class Field> bool is_zero(const Field &f) {
  for (const auto &v : f.values())
    if (v != cplx{})
      return false;
  return true;
}
} // namespace detail

/// phi_0 = f0, phi_n = apply(phi_{n-1}), f = sum phi_i. Stops when
/// norm(phi_n) <= tol * norm(f0), at max_iter, or when norm(phi_n) exceeds
/// divergence_factor * bound(n) for divergence_patience consecutive n.
/// Record n carries residual norm(f_n - f0 - apply(f_n)) = norm(phi_{n+1});
/// the last record's residual is computed explicitly from the returned field.
template <class Field, class Apply, class Norm>
PicardResult<Field> picard_solve(Apply &&apply, const Field &f0, Norm &&norm,
                                 const PicardOptions &opt = {}) {
  using clock = std::chrono::steady_clock;
  if (!(opt.tol > 0.0))
    throw std::invalid_argument("picard_solve: tol > 0 required");
  if (opt.max_iter < 1)
    throw std::invalid_argument("picard_solve: max_iter >= 1 required");
  auto bound = [&](int n) {
    return opt.bound ? opt.bound(n) : std::numeric_limits<double>::quiet_NaN();
  };

  PicardResult<Field> res{f0, {}};
  auto &rep = res.report;
  const double norm0 = norm(f0);
  rep.records.push_back({0, norm0, bound(0), 0.0, 0.0});

  Field phi = f0;
  int over = 0;
  rep.status = IterationStatus::max_iter;
  for (int n = 1; n <= opt.max_iter; ++n) {
    const auto start = clock::now();
    phi = apply(phi);
    const double pn = norm(phi);
    rep.records.back().residual = pn;
    IterationRecord rec{n, pn, bound(n), 0.0, 0.0};

    if (!std::isfinite(pn)) {
      rep.status = IterationStatus::diverged;
    } else {
      if (!detail::is_zero(phi))
        detail::accumulate(res.solution, phi);
      if (opt.bound && pn > opt.divergence_factor * rec.bound) {
        if (++over >= opt.divergence_patience)
          rep.status = IterationStatus::diverged;
      } else {
        over = 0;
      }
      if (rep.status != IterationStatus::diverged && pn <= opt.tol * norm0)
        rep.status = IterationStatus::converged;
    }
    rec.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();
    rep.records.push_back(rec);
    if (rep.status != IterationStatus::max_iter)
      break;
  }

  // Explicit residual of the returned field.
  const auto start = clock::now();
  Field r = apply(res.solution);
  {
    auto rv = r.values();
    auto fv = res.solution.values();
    auto f0v = f0.values();
    for (std::size_t i = 0; i < rv.size(); ++i)
      rv[i] = (fv[i] - f0v[i]) - rv[i];
  }
  rep.final_residual = norm(r);
  rep.records.back().residual = rep.final_residual;
  rep.records.back().wall_time_s +=
      std::chrono::duration<double>(clock::now() - start).count();
  return res;
}

// ---- dense direct solve ---------------------------------------------------

inline constexpr std::size_t direct_solve_max_points = 20000;

/// Solves (I - A) psi = f0 for the matrix A of a linear operator, assembled by
/// probing with unit fields. Rows of A that vanish pin psi = f0 exactly and
/// unknowns whose columns vanish are recovered afterwards, so only the
/// remaining core system is factorised (partial-pivot LU). Real operators
/// (real response to real input) are factorised in real arithmetic.
template <class Field, class Apply> Field direct_solve(Apply &&apply, const Field &f0) {
  const std::size_t n = f0.size();
  if (n > direct_solve_max_points)
    throw SizeGuardError("direct_solve: " + std::to_string(n) + " points exceed the guard of " +
                         std::to_string(direct_solve_max_points));

  // Sparse columns of A.
  std::vector<std::vector<std::pair<std::uint32_t, cplx>>> cols(n);
  std::vector<char> row_nonzero(n, 0);
  bool real_op = true;
  Field probe = f0;
  for (auto &v : probe.values())
    v = cplx{};
  for (std::size_t j = 0; j < n; ++j) {
    probe.values()[j] = 1.0;
    const Field col = apply(probe);
    probe.values()[j] = 0.0;
    auto cv = col.values();
    for (std::size_t i = 0; i < n; ++i)
      if (cv[i] != cplx{}) {
        cols[j].emplace_back(static_cast<std::uint32_t>(i), cv[i]);
        row_nonzero[i] = 1;
        if (cv[i].imag() != 0.0)
          real_op = false;
      }
  }

  std::vector<std::ptrdiff_t> core_pos(n, -1);
  std::vector<std::size_t> core;
  for (std::size_t j = 0; j < n; ++j)
    if (row_nonzero[j] && !cols[j].empty()) {
      core_pos[j] = static_cast<std::ptrdiff_t>(core.size());
      core.push_back(j);
    }

  Field psi = f0;
  auto pv = psi.values();
  auto fv = f0.values();
  const std::size_t m = core.size();

  if (m > 0) {
    // rhs = f0_C + A_{C,Z} f0_Z for the pinned unknowns Z (zero rows).
    Eigen::MatrixXcd rhs(static_cast<Eigen::Index>(m), 1);
    for (std::size_t a = 0; a < m; ++a)
      rhs(static_cast<Eigen::Index>(a), 0) = fv[core[a]];
    for (std::size_t j = 0; j < n; ++j) {
      if (row_nonzero[j])
        continue;
      for (const auto &[i, v] : cols[j])
        if (core_pos[i] >= 0)
          rhs(core_pos[i], 0) += v * fv[j];
    }
    auto fill = [&](auto &mat) {
      mat.setIdentity();
      for (std::size_t a = 0; a < m; ++a)
        for (const auto &[i, v] : cols[core[a]])
          if (core_pos[i] >= 0) {
            if constexpr (std::is_same_v<typename std::decay_t<decltype(mat)>::Scalar, double>)
              mat(core_pos[i], static_cast<Eigen::Index>(a)) -= v.real();
            else
              mat(core_pos[i], static_cast<Eigen::Index>(a)) -= v;
          }
    };
    auto check = [&](const auto &lu) {
      const auto &u = lu.matrixLU();
      double maxd = 0.0, mind = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < u.rows(); ++k) {
        maxd = std::max(maxd, std::abs(u(k, k)));
        mind = std::min(mind, std::abs(u(k, k)));
      }
      if (!(mind > 1e-14 * maxd))
        throw SingularMatrixError("direct_solve: I - A is numerically singular");
    };
    Eigen::MatrixXcd sol;
    if (real_op) {
      Eigen::MatrixXd mat(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      fill(mat);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(mat);
      check(lu);
      Eigen::MatrixXd b(static_cast<Eigen::Index>(m), 2);
      b.col(0) = rhs.col(0).real();
      b.col(1) = rhs.col(0).imag();
      const Eigen::MatrixXd x = lu.solve(b);
      sol.resize(static_cast<Eigen::Index>(m), 1);
      sol.col(0) = x.col(0).cast<cplx>() + cplx(0.0, 1.0) * x.col(1).cast<cplx>();
    } else {
      Eigen::MatrixXcd mat(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      fill(mat);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
      check(lu);
      sol = lu.solve(rhs);
    }
    for (std::size_t a = 0; a < m; ++a)
      pv[core[a]] = sol(static_cast<Eigen::Index>(a), 0);
  }

  // Unknowns with a nonzero row but a zero column: psi = f0 + (A psi).
  std::vector<cplx> extra(n, cplx{});
  for (std::size_t j = 0; j < n; ++j)
    for (const auto &[i, v] : cols[j])
      if (core_pos[i] < 0 && row_nonzero[i])
        extra[i] += v * pv[j];
  for (std::size_t i = 0; i < n; ++i)
    if (core_pos[i] < 0 && row_nonzero[i])
      pv[i] = fv[i] + extra[i];
  return psi;
}

} // namespace mtve
