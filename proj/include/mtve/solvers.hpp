#pragma once

// Two-particle retarded integral operators for d = 1, 2, 3 and their
// iteration bounds.
//
// Bounded kernels factor as  L psi = lambda * A1 (x) A2 [K psi]  where A_i is
// the single-particle Green's-function integral of particle i. A_i is built
// as a sparse matrix on that particle's grid:
//   d = 1  trapezoid in time, cone-interval rule in space, weight J0 / 2;
//   d = 2  substitution u = sqrt(tau^2 - r^2), which turns d^2y / sqrt(s)
//          into du dtheta; (tau, u) is sampled on the triangle
//          0 <= u <= tau <= t;
//   d = 3  the delta function fixes t' = t - r, and s = r^2 / 2 turns
//          d^3y / (4 pi r) into ds dOmega / (4 pi).
// Samples are Monte Carlo draws or midpoint nodes of the same unit cube,
// spread to the grid by causal interpolation (cone_stencil.hpp).
//
// The singular variants (1/|x1'-x2'| in d = 3, s12^{-alpha/2} in d = 2) do not
// factor and are evaluated per output point with joint samples.

#include "mtve/cone_stencil.hpp"
#include "mtve/grid.hpp"
#include "mtve/kernels.hpp"
#include "mtve/parallel.hpp"
#include "mtve/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtve {

enum class Quadrature { deterministic, monte_carlo };

inline std::string_view to_string(Quadrature q) {
  return q == Quadrature::deterministic ? "deterministic" : "monte_carlo";
}

inline std::optional<Quadrature> quadrature_from_string(std::string_view s) {
  if (s == "deterministic")
    return Quadrature::deterministic;
  if (s == "monte_carlo")
    return Quadrature::monte_carlo;
  return std::nullopt;
}

/// Upper limit on integrand evaluations per operator application in
/// deterministic mode for d >= 2.
inline constexpr double deterministic_eval_guard = 1e9;

struct SolverConfig {
  double lambda = 0.0;
  double m1 = 0.0, m2 = 0.0;
  int dimension = 1;
  KernelSpec kernel;
  Quadrature quadrature = Quadrature::monte_carlo;
  int mc_samples = 1024;
  std::uint64_t mc_seed = 1;
  int det_nodes = 6; // midpoint nodes per unit-cube axis, deterministic mode
  double tol = 1e-10;
  int max_iter = 60;

  std::size_t nodes_per_particle() const {
    return static_cast<std::size_t>(det_nodes) * det_nodes * det_nodes;
  }

  /// Integrand evaluations of one application under the 6-d product rule.
  double deterministic_evaluations(const GridSpec &g) const {
    const double n = static_cast<double>(nodes_per_particle());
    return static_cast<double>(g.size()) * n * n;
  }

  /// All violated invariants, one message each.
  std::vector<std::string> diagnostics(const GridSpec &g) const {
    std::vector<std::string> d;
    if (dimension != g.dimension)
      d.push_back("solver: dimension must equal grid dimension");
    if (dimension < 1 || dimension > 3)
      d.push_back("solver: dimension must be 1, 2 or 3");
    if (!std::isfinite(lambda))
      d.push_back("solver: lambda must be finite");
    if (!(m1 >= 0.0) || !(m2 >= 0.0))
      d.push_back("solver: masses must be >= 0");
    if (dimension == 3 && (m1 != 0.0 || m2 != 0.0))
      d.push_back("solver: d = 3 requires m1 = m2 = 0 (massless retarded Green's function only)");
    if (!std::isfinite(kernel.amplitude))
      d.push_back("kernel: amplitude must be finite");
    if (kernel.family == KernelFamily::gaussian_lightcone && !(kernel.sigma > 0.0))
      d.push_back("kernel: gaussian_lightcone requires sigma > 0");
    if (kernel.family == KernelFamily::alpha_power_2d && !(kernel.alpha > 0.0 && kernel.alpha < 1.0))
      d.push_back("kernel: alpha_power_2d requires 0 < alpha < 1");
    if (kernel.family == KernelFamily::alpha_power_2d && dimension != 2)
      d.push_back("kernel: alpha_power_2d is only defined for d = 2");
    if (kernel.family == KernelFamily::inverse_distance_3d && dimension != 3)
      d.push_back("kernel: inverse_distance_3d is only defined for d = 3");
    if (kernel.family == KernelFamily::custom_bounded && !kernel.custom)
      d.push_back("kernel: custom_bounded needs an evaluator");
    if (mc_samples < 1)
      d.push_back("solver: mc_samples >= 1 required");
    if (det_nodes < 1)
      d.push_back("solver: det_nodes >= 1 required");
    if (!(tol > 0.0))
      d.push_back("solver: tol > 0 required");
    if (max_iter < 1)
      d.push_back("solver: max_iter >= 1 required");
    if (dimension >= 2 && quadrature == Quadrature::deterministic &&
        g.check().empty() && deterministic_evaluations(g) > deterministic_eval_guard)
      d.push_back("solver: deterministic quadrature exceeds 1e9 integrand evaluations per "
                  "iteration; use monte_carlo");
    return d;
  }

  void validate(const GridSpec &g) const {
    const auto d = diagnostics(g);
    if (!d.empty())
      throw std::invalid_argument(d.front());
  }
};

// ---- single-particle sampling ----------------------------------------------

enum class ParticleRule { kg_2d, wave_3d, alpha_2d };

/// int_0^R r (R^2 - r^2)^{-alpha/2} dr = R^{2 - alpha} / (2 - alpha).
inline double power_radial_weight(double R, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("power_radial_weight: 0 < alpha < 1 required");
  return std::pow(R, 2.0 - alpha) / (2.0 - alpha);
}

struct ParticleSample {
  double tau = 0.0;             // t - t'
  std::array<double, 3> y{};    // x' - x
  double weight = 0.0;          // integral weight (before 1/S)
};

/// Maps a point of the unit cube to a sample of one particle's integral
/// int_0^t dt' int d^d y G(t - t', y) h(t', x + y) (prefactors documented per
/// rule in the file header; alpha_2d omits the 1/(2 pi) normalisation).
inline ParticleSample particle_sample(ParticleRule rule, double t, double mass, double alpha,
                                      double a, double b, double c) {
  ParticleSample s;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (rule) {
  case ParticleRule::kg_2d: {
    const double tau = t * std::sqrt(a);
    const double u = tau * b;
    const double r = std::sqrt(std::max(0.0, tau * tau - u * u));
    const double th = two_pi * c;
    s.tau = tau;
    s.y = {r * std::cos(th), r * std::sin(th), 0.0};
    s.weight = 0.5 * t * t * std::cos(mass * u);
    break;
  }
  case ParticleRule::wave_3d: {
    const double r = t * std::sqrt(a);
    const double z = 2.0 * b - 1.0;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double ph = two_pi * c;
    s.tau = r;
    s.y = {r * rho * std::cos(ph), r * rho * std::sin(ph), r * z};
    s.weight = 0.5 * t * t;
    break;
  }
  case ParticleRule::alpha_2d: {
    const double tau = t * a;
    const double e = 1.0 / (1.0 - 0.5 * alpha);
    const double r = tau * std::sqrt(std::max(0.0, 1.0 - std::pow(1.0 - b, e)));
    const double th = two_pi * c;
    s.tau = tau;
    s.y = {r * std::cos(th), r * std::sin(th), 0.0};
    s.weight = t * two_pi * power_radial_weight(tau, alpha) *
               std::cos(mass * std::sqrt(std::max(0.0, tau * tau - r * r)));
    break;
  }
  }
  return s;
}

/// Midpoint node q of an n^3 lattice on the unit cube.
inline std::array<double, 3> lattice_node(std::size_t q, int n) {
  const auto nn = static_cast<std::size_t>(n);
  return {(static_cast<double>(q / (nn * nn)) + 0.5) / n,
          (static_cast<double>((q / nn) % nn) + 0.5) / n,
          (static_cast<double>(q % nn) + 0.5) / n};
}

/// int_{|x| < tau} d^2x (tau^2 - |x|^2)^{-1/2} by the substitution
/// u = sqrt(tau^2 - r^2) and a midpoint rule in (u, theta).
inline double quad_identity_2d(double tau, int n_radial) {
  if (!(tau > 0.0) || n_radial < 1)
    throw std::invalid_argument("quad_identity_2d: tau > 0 and n_radial >= 1 required");
  const double hu = tau / n_radial;
  double acc = 0.0;
  for (int i = 0; i < n_radial; ++i) {
    const double u = (i + 0.5) * hu;
    const double r = std::sqrt(tau * tau - u * u);
    const double integrand = r / u; // r / sqrt(tau^2 - r^2)
    const double jacobian = u / r;  // |dr/du|
    acc += integrand * jacobian * hu;
  }
  return 2.0 * std::numbers::pi * acc;
}

// ---- bounds ------------------------------------------------------------------

namespace detail {
inline double factorial_bound(int n, double norm, double base, double T_pow_per_n, double log_fact) {
  if (n < 0)
    throw std::invalid_argument("bound: n >= 0 required");
  if (n == 0)
    return norm;
  if (norm == 0.0 || base == 0.0)
    return 0.0;
  return norm * std::exp(n * std::log(base) + n * std::log(T_pow_per_n) - log_fact);
}
} // namespace detail

inline double bound_1d(int n, double norm_psifree, double sup_K, double lambda, double T) {
  return detail::factorial_bound(n, norm_psifree, 0.5 * std::abs(lambda) * sup_K,
                                 std::pow(T, 4.0), std::lgamma(2.0 * n + 1.0));
}

inline double bound_2d(int n, double norm_psifree, double sup_K, double lambda, double T) {
  return detail::factorial_bound(n, norm_psifree, std::abs(lambda) * 0.5 * sup_K,
                                 std::pow(T, 4.0), std::lgamma(2.0 * n + 1.0));
}

inline double bound_3d(int n, double norm_psifree, double sup_K, double lambda, double T) {
  return detail::factorial_bound(n, norm_psifree, 0.5 * std::abs(lambda) * sup_K,
                                 std::pow(T, 4.0), std::lgamma(2.0 * n + 1.0));
}

inline double bound_3d_singular(int n, double norm_psifree, double sup_f, double lambda, double T) {
  const double c = lambda * lambda * sup_f * sup_f * (std::pow(T, 3.0) + std::pow(T, 6.0)) / 3.0;
  return detail::factorial_bound(n, norm_psifree, std::sqrt(c), T, std::lgamma(n + 1.0));
}

inline double bound_2d_alpha(int n, double norm_psifree, double lambda, double T, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("bound_2d_alpha: 0 < alpha < 1 required");
  const double c = lambda * lambda * std::pow(2.0 * T, 12.0 - 4.0 * alpha) /
                   (4.0 * std::numbers::pi * std::numbers::pi * 64.0 * std::pow(1.0 - alpha, 3.0));
  return detail::factorial_bound(n, norm_psifree, std::sqrt(c), T, std::lgamma(n + 1.0));
}

/// Bound on ||phi_n|| matching the operator selected by cfg.
inline double bound_for(const SolverConfig &cfg, int n, double norm_psifree, double T) {
  const auto &k = cfg.kernel;
  switch (cfg.dimension) {
  case 1:
    return bound_1d(n, norm_psifree, certify_sup_norm(k), cfg.lambda, T);
  case 2:
    if (k.family == KernelFamily::alpha_power_2d)
      return bound_2d_alpha(n, norm_psifree, cfg.lambda * std::abs(k.amplitude), T, k.alpha);
    return bound_2d(n, norm_psifree, certify_sup_norm(k), cfg.lambda, T);
  case 3:
    if (k.family == KernelFamily::inverse_distance_3d)
      return bound_3d_singular(n, norm_psifree, certify_sup_norm(k), cfg.lambda, T);
    return bound_3d(n, norm_psifree, certify_sup_norm(k), cfg.lambda, T);
  }
  throw std::invalid_argument("bound_for: dimension must be 1, 2 or 3");
}

// ---- operators -----------------------------------------------------------------

/// Single-particle Green's-function integral as a sparse matrix on the
/// particle grid (nt * nx^d rows, time-major).
struct ParticleOperator {
  std::vector<SparseRow> rows;
};

namespace detail {

inline std::uint64_t particle_stream(int particle, int i_out) {
  return (static_cast<std::uint64_t>(0x5a17) << 48) | (static_cast<std::uint64_t>(particle) << 32) |
         static_cast<std::uint64_t>(i_out);
}

inline ParticleOperator rows_from_stencils(const GridSpec &g,
                                           const std::vector<RelativeStencil> &stencils) {
  const std::size_t P = g.points_per_particle();
  ParticleOperator op;
  op.rows.resize(static_cast<std::size_t>(g.nt) * P);
  for (int i = 1; i < g.nt; ++i)
    for (std::size_t ix = 0; ix < P; ++ix)
      op.rows[static_cast<std::size_t>(i) * P + ix] =
          absolute_row(g, stencils[static_cast<std::size_t>(i)], ix);
  return op;
}

} // namespace detail

/// d = 1: trapezoid in t' over [0, t] and, on each slice, the cone interval
/// [-tau, tau] covered by the grid points with |o| dx <= tau (trapezoid) plus
/// end pieces of length tau - k dx credited to the outermost points; every
/// node carries J0(m sqrt(tau^2 - z^2)) / 2.
inline ParticleOperator particle_operator_1d(const GridSpec &g, double mass) {
  const double dt = g.dt(), dx = g.dx();
  std::vector<RelativeStencil> st;
  for (int i = 0; i < g.nt; ++i)
    st.emplace_back(g, i);
  for (int i = 1; i < g.nt; ++i) {
    auto &s = st[static_cast<std::size_t>(i)];
    for (int j = 0; j <= i; ++j) {
      const double wt = (j == 0 || j == i) ? 0.5 * dt : dt;
      const int di = i - j;
      const double tau = di * dt;
      if (tau == 0.0)
        continue;
      int k = 0;
      while (in_past_cone(di, {k + 1, 0, 0}, 1, dt, dx))
        ++k;
      const double extra = std::max(0.0, tau - k * dx);
      for (int o = -k; o <= k; ++o) {
        double wx;
        if (k == 0)
          wx = 2.0 * tau;
        else
          wx = (std::abs(o) == k ? 0.5 * dx + extra : dx);
        const double z = o * dx;
        const double arg = mass * std::sqrt(std::max(0.0, tau * tau - z * z));
        s.add(StencilKey{j, {o, 0, 0}}, wt * wx * 0.5 * bessel_j0(arg));
      }
    }
  }
  return detail::rows_from_stencils(g, st);
}

/// d = 2 or 3: sampled single-particle operator. Monte Carlo streams are keyed
/// by (seed, particle, output time index) and shared by all spatial points.
inline ParticleOperator particle_operator_sampled(const GridSpec &g, ParticleRule rule, double mass,
                                                  double alpha, const SolverConfig &cfg,
                                                  int particle) {
  std::vector<RelativeStencil> st;
  for (int i = 0; i < g.nt; ++i)
    st.emplace_back(g, i);
  const bool mc = cfg.quadrature == Quadrature::monte_carlo;
  const std::size_t S = mc ? static_cast<std::size_t>(cfg.mc_samples) : cfg.nodes_per_particle();
  for (int i = 1; i < g.nt; ++i) {
    auto &s = st[static_cast<std::size_t>(i)];
    const double t = g.t(i);
    CounterStream rng(cfg.mc_seed, detail::particle_stream(particle, i));
    for (std::size_t q = 0; q < S; ++q) {
      std::array<double, 3> u;
      if (mc)
        u = {rng.uniform(), rng.uniform(), rng.uniform()};
      else
        u = lattice_node(q, cfg.det_nodes);
      const auto smp = particle_sample(rule, t, mass, alpha, u[0], u[1], u[2]);
      s.add_sample(smp.tau, smp.y, smp.weight / static_cast<double>(S));
    }
  }
  return detail::rows_from_stencils(g, st);
}

struct PointEstimate {
  cplx value;
  double std_error = 0.0; // Monte Carlo standard error of |value| (0 if deterministic)
};

/// L psi = prefactor * A1 (x) A2 [K psi].
class SeparableOperator {
public:
  SeparableOperator(const GridSpec &g, const SolverConfig &cfg, ParticleOperator a1,
                    ParticleOperator a2)
      : g_(g), cfg_(cfg), a1_(std::move(a1)), a2_(std::move(a2)) {
    if (cfg.kernel.family != KernelFamily::constant) {
      const std::size_t P = g.points_per_particle();
      k_.resize(g.size());
      for (int a = 0; a < g.nt; ++a)
        for (int b = 0; b < g.nt; ++b)
          for (std::size_t i = 0; i < P; ++i) {
            const auto x1 = g.coords(i);
            for (std::size_t j = 0; j < P; ++j) {
              const auto x2 = g.coords(j);
              k_[g.index(a, b, i, j)] = interaction_eval(
                  cfg.kernel, g.t(a), std::span<const double>(x1.data(), static_cast<std::size_t>(g.dimension)),
                  g.t(b), std::span<const double>(x2.data(), static_cast<std::size_t>(g.dimension)));
            }
          }
    }
  }

  WaveField operator()(const WaveField &psi) const {
    if (!(psi.spec() == g_))
      throw ShapeError("operator applied to a field on a different grid");
    WaveField out(g_);
    if (cfg_.lambda == 0.0)
      return out;
    const std::size_t P = g_.points_per_particle();
    const std::size_t NQ = static_cast<std::size_t>(g_.nt) * P;
    const int nt = g_.nt;
    // G[q1][q2] = K psi with q = it * P + ix.
    auto fidx = [&](std::size_t q1, std::size_t q2) {
      return g_.index(static_cast<int>(q1 / P), static_cast<int>(q2 / P), q1 % P, q2 % P);
    };
    std::vector<cplx> G(NQ * NQ);
    const double amp = cfg_.kernel.amplitude;
    for (std::size_t q1 = 0; q1 < NQ; ++q1)
      for (std::size_t q2 = 0; q2 < NQ; ++q2) {
        const std::size_t f = fidx(q1, q2);
        G[q1 * NQ + q2] = (k_.empty() ? amp : k_[f]) * psi[f];
      }
    // H[q1][p2] = sum_{q2} A2[p2][q2] G[q1][q2]
    std::vector<cplx> H(NQ * NQ);
    parallel_for(NQ, [&](std::size_t q1) {
      const cplx *grow = &G[q1 * NQ];
      cplx *hrow = &H[q1 * NQ];
      for (std::size_t p2 = 0; p2 < NQ; ++p2) {
        cplx acc{};
        for (const auto &[q2, w] : a2_.rows[p2])
          acc += w * grow[q2];
        hrow[p2] = acc;
      }
    });
    // O[p1][p2] = sum_{q1} A1[p1][q1] H[q1][p2]
    parallel_for(NQ, [&](std::size_t p1) {
      const auto &row = a1_.rows[p1];
      if (row.empty())
        return;
      std::vector<cplx> acc(NQ);
      for (const auto &[q1, w] : row) {
        const cplx *hrow = &H[static_cast<std::size_t>(q1) * NQ];
        for (std::size_t p2 = 0; p2 < NQ; ++p2)
          acc[p2] += w * hrow[p2];
      }
      for (std::size_t p2 = 0; p2 < NQ; ++p2)
        if (!a2_.rows[p2].empty())
          out[fidx(p1, p2)] = cfg_.lambda * acc[p2];
    });
    (void)nt;
    return out;
  }

  const ParticleOperator &particle(int i) const { return i == 1 ? a1_ : a2_; }

private:
  GridSpec g_;
  SolverConfig cfg_;
  ParticleOperator a1_, a2_;
  std::vector<double> k_;
};

/// Singular variants: joint samples per output point. Monte Carlo streams are
/// keyed by (seed, flattened output index).
class JointOperator {
public:
  JointOperator(const GridSpec &g, const SolverConfig &cfg, ParticleRule rule)
      : g_(g), cfg_(cfg), rule_(rule) {}

  WaveField operator()(const WaveField &psi) const {
    if (!(psi.spec() == g_))
      throw ShapeError("operator applied to a field on a different grid");
    WaveField out(g_);
    if (cfg_.lambda == 0.0)
      return out;
    const std::size_t P = g_.points_per_particle();
    const std::size_t block = P * P;
    parallel_for(g_.size(), [&](std::size_t idx) {
      const std::size_t tt = idx / block;
      const int it1 = static_cast<int>(tt / static_cast<std::size_t>(g_.nt));
      const int it2 = static_cast<int>(tt % static_cast<std::size_t>(g_.nt));
      if (it1 == 0 || it2 == 0)
        return;
      const std::size_t ix1 = (idx % block) / P, ix2 = idx % P;
      out[idx] = estimate(psi, it1, ix1, it2, ix2, idx).value;
    });
    return out;
  }

  PointEstimate at(const WaveField &psi, int it1, std::size_t ix1, int it2, std::size_t ix2) const {
    if (it1 == 0 || it2 == 0 || cfg_.lambda == 0.0)
      return {};
    return estimate(psi, it1, ix1, it2, ix2, g_.index(it1, it2, ix1, ix2));
  }

private:
  double prefactor() const {
    if (rule_ == ParticleRule::alpha_2d)
      return cfg_.lambda * std::pow(2.0 * std::numbers::pi, -3.0);
    return cfg_.lambda;
  }

  /// Bounded factor times the singular interaction factor at the sample.
  double joint_factor(double t1p, const std::array<double, 3> &x1p, double t2p,
                      const std::array<double, 3> &x2p) const {
    double r2 = 0.0;
    for (int k = 0; k < g_.dimension; ++k) {
      const double d = x1p[static_cast<std::size_t>(k)] - x2p[static_cast<std::size_t>(k)];
      r2 += d * d;
    }
    const double f = cfg_.kernel.amplitude;
    if (rule_ == ParticleRule::alpha_2d) {
      const double dt = t1p - t2p;
      const double s = dt * dt - r2;
      return s > 0.0 ? f * std::pow(s, -0.5 * cfg_.kernel.alpha) : 0.0;
    }
    return r2 > 0.0 ? f / std::sqrt(r2) : 0.0;
  }

  PointEstimate estimate(const WaveField &psi, int it1, std::size_t ix1, int it2, std::size_t ix2,
                         std::size_t stream) const {
    const int d = g_.dimension;
    const auto x1 = g_.coords(ix1), x2 = g_.coords(ix2);
    const auto a1 = g_.unflatten(ix1), a2 = g_.unflatten(ix2);
    const double t1 = g_.t(it1), t2 = g_.t(it2);
    const double alpha = cfg_.kernel.alpha;
    const bool mc = cfg_.quadrature == Quadrature::monte_carlo;
    const std::size_t S1 = mc ? 1 : cfg_.nodes_per_particle();
    const std::size_t S = mc ? static_cast<std::size_t>(cfg_.mc_samples) : S1 * S1;
    CounterStream rng(cfg_.mc_seed, stream);

    struct Pt {
      std::size_t q;
      double w;
    };
    auto corners = [&](int i_out, const std::array<int, 3> &a, const ParticleSample &s,
                       std::array<Pt, 16> &buf) {
      int n = 0;
      causal_corners(g_, i_out, s.tau, s.y, [&](const StencilKey &k, double w) {
        std::array<int, 3> b{0, 0, 0};
        for (int c = 0; c < d; ++c) {
          const int v = a[static_cast<std::size_t>(c)] + k.o[static_cast<std::size_t>(c)];
          if (v < 0 || v >= g_.nx)
            return;
          b[static_cast<std::size_t>(c)] = v;
        }
        buf[static_cast<std::size_t>(n++)] = {static_cast<std::size_t>(k.j) * g_.points_per_particle() + g_.flatten(b), w};
      });
      return n;
    };

    const std::size_t P = g_.points_per_particle();
    cplx sum{};
    double sum_abs2 = 0.0;
    std::array<Pt, 16> c1, c2;
    for (std::size_t q = 0; q < S; ++q) {
      std::array<double, 3> u1, u2;
      if (mc) {
        u1 = {rng.uniform(), rng.uniform(), rng.uniform()};
        u2 = {rng.uniform(), rng.uniform(), rng.uniform()};
      } else {
        u1 = lattice_node(q / S1, cfg_.det_nodes);
        u2 = lattice_node(q % S1, cfg_.det_nodes);
      }
      const double m1 = cfg_.m1, m2 = cfg_.m2;
      const auto s1 = particle_sample(rule_, t1, m1, alpha, u1[0], u1[1], u1[2]);
      const auto s2 = particle_sample(rule_, t2, m2, alpha, u2[0], u2[1], u2[2]);
      std::array<double, 3> x1p{}, x2p{};
      for (int k = 0; k < d; ++k) {
        x1p[static_cast<std::size_t>(k)] = x1[static_cast<std::size_t>(k)] + s1.y[static_cast<std::size_t>(k)];
        x2p[static_cast<std::size_t>(k)] = x2[static_cast<std::size_t>(k)] + s2.y[static_cast<std::size_t>(k)];
      }
      const double w = s1.weight * s2.weight * joint_factor(t1 - s1.tau, x1p, t2 - s2.tau, x2p);
      if (w == 0.0)
        continue;
      const int n1 = corners(it1, a1, s1, c1);
      const int n2 = corners(it2, a2, s2, c2);
      cplx v{};
      for (int i = 0; i < n1; ++i) {
        const auto [q1, w1] = c1[static_cast<std::size_t>(i)];
        const int j1 = static_cast<int>(q1 / P);
        for (int j = 0; j < n2; ++j) {
          const auto [q2, w2] = c2[static_cast<std::size_t>(j)];
          v += w1 * w2 * psi[g_.index(j1, static_cast<int>(q2 / P), q1 % P, q2 % P)];
        }
      }
      v *= w;
      sum += v;
      sum_abs2 += std::norm(v);
    }
    const double Sd = static_cast<double>(S);
    const cplx mean = sum / Sd;
    PointEstimate e;
    e.value = prefactor() * mean;
    if (mc && S > 1) {
      const double var = std::max(0.0, (sum_abs2 / Sd - std::norm(mean)) * Sd / (Sd - 1.0));
      e.std_error = std::abs(prefactor()) * std::sqrt(var / Sd);
    }
    return e;
  }

  GridSpec g_;
  SolverConfig cfg_;
  ParticleRule rule_;
};

using Operator = std::function<WaveField(const WaveField &)>;

namespace detail {
inline void require_bounded(const SolverConfig &cfg, const char *who) {
  if (is_singular(cfg.kernel.family))
    throw UnsupportedError(std::string(who) + ": kernel family " +
                           std::string(to_string(cfg.kernel.family)) + " is not bounded");
}
inline void require_family(const SolverConfig &cfg, KernelFamily f, const char *who) {
  if (cfg.kernel.family != f)
    throw UnsupportedError(std::string(who) + ": requires kernel family " + std::string(to_string(f)));
}
inline void require_dimension(const GridSpec &g, const SolverConfig &cfg, int d, const char *who) {
  if (g.dimension != d || cfg.dimension != d)
    throw ShapeError(std::string(who) + ": requires dimension " + std::to_string(d));
  cfg.validate(g);
}
} // namespace detail

inline SeparableOperator make_operator_1d(const GridSpec &g, const SolverConfig &cfg) {
  detail::require_dimension(g, cfg, 1, "apply_L_1d");
  detail::require_bounded(cfg, "apply_L_1d");
  return SeparableOperator(g, cfg, particle_operator_1d(g, cfg.m1), particle_operator_1d(g, cfg.m2));
}

inline SeparableOperator make_operator_2d(const GridSpec &g, const SolverConfig &cfg) {
  detail::require_dimension(g, cfg, 2, "apply_L_2d");
  detail::require_bounded(cfg, "apply_L_2d");
  return SeparableOperator(g, cfg,
                           particle_operator_sampled(g, ParticleRule::kg_2d, cfg.m1, 0.0, cfg, 1),
                           particle_operator_sampled(g, ParticleRule::kg_2d, cfg.m2, 0.0, cfg, 2));
}

inline SeparableOperator make_operator_3d(const GridSpec &g, const SolverConfig &cfg) {
  detail::require_dimension(g, cfg, 3, "apply_L_3d");
  detail::require_bounded(cfg, "apply_L_3d");
  return SeparableOperator(g, cfg,
                           particle_operator_sampled(g, ParticleRule::wave_3d, 0.0, 0.0, cfg, 1),
                           particle_operator_sampled(g, ParticleRule::wave_3d, 0.0, 0.0, cfg, 2));
}

inline JointOperator make_operator_3d_singular(const GridSpec &g, const SolverConfig &cfg) {
  detail::require_dimension(g, cfg, 3, "apply_L_3d_singular");
  detail::require_family(cfg, KernelFamily::inverse_distance_3d, "apply_L_3d_singular");
  return JointOperator(g, cfg, ParticleRule::wave_3d);
}

inline JointOperator make_operator_2d_alpha(const GridSpec &g, const SolverConfig &cfg) {
  detail::require_dimension(g, cfg, 2, "apply_L_2d_alpha");
  detail::require_family(cfg, KernelFamily::alpha_power_2d, "apply_L_2d_alpha");
  return JointOperator(g, cfg, ParticleRule::alpha_2d);
}

inline WaveField apply_L_1d(const WaveField &psi, const SolverConfig &cfg) {
  return make_operator_1d(psi.spec(), cfg)(psi);
}
inline WaveField apply_L_2d(const WaveField &psi, const SolverConfig &cfg) {
  return make_operator_2d(psi.spec(), cfg)(psi);
}
inline WaveField apply_L_3d(const WaveField &psi, const SolverConfig &cfg) {
  return make_operator_3d(psi.spec(), cfg)(psi);
}
inline WaveField apply_L_3d_singular(const WaveField &psi, const SolverConfig &cfg) {
  return make_operator_3d_singular(psi.spec(), cfg)(psi);
}
inline WaveField apply_L_2d_alpha(const WaveField &psi, const SolverConfig &cfg) {
  return make_operator_2d_alpha(psi.spec(), cfg)(psi);
}

/// The operator selected by dimension and kernel family.
inline Operator make_operator(const GridSpec &g, const SolverConfig &cfg) {
  switch (cfg.dimension) {
  case 1:
    return make_operator_1d(g, cfg);
  case 2:
    if (cfg.kernel.family == KernelFamily::alpha_power_2d)
      return make_operator_2d_alpha(g, cfg);
    return make_operator_2d(g, cfg);
  case 3:
    if (cfg.kernel.family == KernelFamily::inverse_distance_3d)
      return make_operator_3d_singular(g, cfg);
    return make_operator_3d(g, cfg);
  }
  throw std::invalid_argument("make_operator: dimension must be 1, 2 or 3");
}

} // namespace mtve
