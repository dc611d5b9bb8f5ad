#pragma once

// Exact solutions of the free two-particle Klein-Gordon system
// (box_i + m_i^2) psi = 0, built as products u1(t1,x1) u2(t2,x2) of
// positive-frequency superpositions of e^{i(k.x - omega(k) t)}.

#include "mtve/grid.hpp"
#include "mtve/parallel.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

namespace mtve {

enum class FreeMode { plane_wave_product, gaussian_packet_product };

inline std::string_view to_string(FreeMode m) {
  return m == FreeMode::plane_wave_product ? "plane_wave_product" : "gaussian_packet_product";
}

inline std::optional<FreeMode> free_mode_from_string(std::string_view s) {
  if (s == "plane_wave_product")
    return FreeMode::plane_wave_product;
  if (s == "gaussian_packet_product")
    return FreeMode::gaussian_packet_product;
  return std::nullopt;
}

struct ParticleState {
  std::vector<double> k;  // wavevector (plane wave) or mean momentum (packet)
  std::vector<double> x0; // packet centre
  double width = 1.0;     // packet width w
};

struct FreeSolutionSpec {
  FreeMode mode = FreeMode::gaussian_packet_product;
  ParticleState p1, p2;
  double m1 = 0.0, m2 = 0.0;
  cplx amplitude{1.0, 0.0};
  int nq = 32;
  double field_tol = 1e-3;

  std::string check(int dimension) const {
    for (const auto *p : {&p1, &p2}) {
      if (!p->k.empty() && static_cast<int>(p->k.size()) != dimension)
        return "free: wavevector length must equal the grid dimension";
      if (!p->x0.empty() && static_cast<int>(p->x0.size()) != dimension)
        return "free: packet centre length must equal the grid dimension";
      if (mode == FreeMode::gaussian_packet_product && !(p->width > 0.0))
        return "free: packet width w > 0 required";
    }
    if (!(m1 >= 0.0) || !(m2 >= 0.0))
      return "free: masses must be >= 0";
    if (mode == FreeMode::gaussian_packet_product && nq < 8)
      return "free: nq >= 8 required for packets";
    if (!(field_tol > 0.0 && field_tol < 1.0))
      return "free: 0 < field_tol < 1 required";
    return {};
  }

  /// Half-width of the region outside which the packets are below field_tol
  /// at t = 0 (0 for plane waves, which are not localised).
  double data_halfwidth() const {
    if (mode == FreeMode::plane_wave_product)
      return 0.0;
    double h = 0.0;
    for (const auto *p : {&p1, &p2}) {
      double c = 0.0;
      for (double v : p->x0)
        c = std::max(c, std::abs(v));
      h = std::max(h, c + p->width * std::sqrt(2.0 * std::log(1.0 / field_tol)));
    }
    return h;
  }
};

/// Minimal box half-width keeping every past-cone dependency inside the box.
inline double required_box_halfwidth(const FreeSolutionSpec &f, double T) {
  return 2.0 * T + f.data_halfwidth();
}

/// Gauss-Hermite rule for weight e^{-s^2}: nodes and weights.
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z)))
        break;
    }
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
  return {x, w};
}

namespace detail {

struct Mode {
  std::array<double, 3> k{};
  double omega = 0.0;
  cplx coeff;
};

inline double component(const std::vector<double> &v, int a) {
  return v.empty() ? 0.0 : v[static_cast<std::size_t>(a)];
}

inline std::vector<Mode> particle_modes(const FreeSolutionSpec &spec, const ParticleState &p,
                                        double mass, int d) {
  auto omega = [mass](const std::array<double, 3> &k) {
    return std::sqrt(mass * mass + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
  };
  std::vector<Mode> modes;
  if (spec.mode == FreeMode::plane_wave_product) {
    Mode m;
    for (int a = 0; a < d; ++a)
      m.k[static_cast<std::size_t>(a)] = component(p.k, a);
    m.omega = omega(m.k);
    m.coeff = 1.0;
    modes.push_back(m);
    return modes;
  }
  // Gaussian amplitude exp(-w^2 (k - kbar)^2 / 2) per axis with k = kbar +
  // sqrt(2) s / w; normalised so that u(0, x0) = 1.
  const auto [s, ws] = gauss_hermite(spec.nq);
  const std::size_t nq = s.size();
  std::size_t total = 1;
  for (int a = 0; a < d; ++a)
    total *= nq;
  modes.reserve(total);
  for (std::size_t q = 0; q < total; ++q) {
    Mode m;
    double c = 1.0;
    std::size_t r = q;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t j = r % nq;
      r /= nq;
      m.k[static_cast<std::size_t>(a)] =
          component(p.k, a) + std::numbers::sqrt2 * s[j] / p.width;
      c *= ws[j] / std::sqrt(std::numbers::pi);
    }
    m.omega = omega(m.k);
    m.coeff = c;
    modes.push_back(m);
  }
  return modes;
}

/// u(t_i, x) for all (it, ix) of one particle, time-major.
inline std::vector<cplx> particle_table(const FreeSolutionSpec &spec, const ParticleState &p,
                                        double mass, const GridSpec &g) {
  const int d = g.dimension;
  const auto modes = particle_modes(spec, p, mass, d);
  const std::size_t P = g.points_per_particle();
  std::vector<cplx> table(static_cast<std::size_t>(g.nt) * P);
  parallel_for(table.size(), [&](std::size_t idx) {
    const int it = static_cast<int>(idx / P);
    const auto x = g.coords(idx % P);
    const double t = g.t(it);
    double y[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a)
      y[a] = x[static_cast<std::size_t>(a)] - component(p.x0, a);
    cplx acc{};
    for (const auto &m : modes) {
      const double ph = m.k[0] * y[0] + m.k[1] * y[1] + m.k[2] * y[2] - m.omega * t;
      acc += m.coeff * cplx(std::cos(ph), std::sin(ph));
    }
    table[idx] = acc;
  });
  return table;
}

} // namespace detail

/// Largest |u_i(0, x)| over grid points outside the declared data region of
/// a packet, per axis. The momentum rule reproduces the Gaussian only for
/// |x - x0| below roughly w sqrt(2 nq); beyond that spurious copies appear.
/// At t = 0 each factor is a product over axes, so axes are checked one at a time.
inline double packet_tail(const FreeSolutionSpec &spec, const GridSpec &g) {
  if (spec.mode != FreeMode::gaussian_packet_product)
    return 0.0;
  const auto [s, ws] = gauss_hermite(spec.nq);
  const double reach = std::sqrt(2.0 * std::log(1.0 / spec.field_tol));
  double worst = 0.0;
  for (const auto *p : {&spec.p1, &spec.p2})
    for (int a = 0; a < g.dimension; ++a) {
      const double c = p->x0.empty() ? 0.0 : p->x0[static_cast<std::size_t>(a)];
      for (int i = 0; i < g.nx; ++i) {
        const double y = g.x(i) - c;
        if (std::abs(y) <= p->width * reach)
          continue;
        cplx acc{};
        for (std::size_t j = 0; j < s.size(); ++j) {
          const double ph = std::numbers::sqrt2 * s[j] / p->width * y;
          acc += ws[j] / std::sqrt(std::numbers::pi) * cplx(std::cos(ph), std::sin(ph));
        }
        worst = std::max(worst, std::abs(acc));
      }
    }
  return worst;
}

/// Single-particle factor u(t, x) evaluated at arbitrary coordinates.
inline cplx free_factor(const FreeSolutionSpec &spec, int particle, double t,
                        std::span<const double> x) {
  const auto &p = particle == 1 ? spec.p1 : spec.p2;
  const double mass = particle == 1 ? spec.m1 : spec.m2;
  const int d = static_cast<int>(x.size());
  cplx acc{};
  for (const auto &m : detail::particle_modes(spec, p, mass, d)) {
    double ph = -m.omega * t;
    for (int a = 0; a < d; ++a)
      ph += m.k[static_cast<std::size_t>(a)] * (x[static_cast<std::size_t>(a)] -
                                               detail::component(p.x0, a));
    acc += m.coeff * cplx(std::cos(ph), std::sin(ph));
  }
  return acc;
}

inline WaveField generate_free(const FreeSolutionSpec &spec, const GridSpec &g) {
  g.validate();
  if (auto msg = spec.check(g.dimension); !msg.empty())
    throw ShapeError(msg);
  const auto u1 = detail::particle_table(spec, spec.p1, spec.m1, g);
  const auto u2 = detail::particle_table(spec, spec.p2, spec.m2, g);
  const std::size_t P = g.points_per_particle();
  WaveField out(g);
  for (int a = 0; a < g.nt; ++a)
    for (int b = 0; b < g.nt; ++b)
      for (std::size_t i = 0; i < P; ++i) {
        const cplx v1 = spec.amplitude * u1[static_cast<std::size_t>(a) * P + i];
        for (std::size_t j = 0; j < P; ++j)
          out[g.index(a, b, i, j)] = v1 * u2[static_cast<std::size_t>(b) * P + j];
      }
  return out;
}

/// max over interior points (in particle i's coordinates) of
/// |(d_t^2 - Laplacian + m^2) psi| with second-order centred differences.
inline double kg_residual(const WaveField &f, int particle, double mass) {
  const auto &g = f.spec();
  if (particle != 1 && particle != 2)
    throw std::invalid_argument("kg_residual: particle must be 1 or 2");
  if (g.nt < 3 || g.nx < 3)
    throw std::invalid_argument("kg_residual: nt >= 3 and nx >= 3 required");
  const std::size_t P = g.points_per_particle();
  const double it2 = 1.0 / (g.dt() * g.dt());
  const double ix2 = 1.0 / (g.dx() * g.dx());
  std::vector<std::size_t> stride(static_cast<std::size_t>(g.dimension));
  for (int a = g.dimension - 1, s = 1; a >= 0; --a, s *= g.nx)
    stride[static_cast<std::size_t>(a)] = static_cast<std::size_t>(s);

  double worst = 0.0;
  for (int a = 0; a < g.nt; ++a)
    for (int b = 0; b < g.nt; ++b) {
      const int ti = particle == 1 ? a : b;
      if (ti == 0 || ti == g.nt - 1)
        continue;
      for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
          const std::size_t own = particle == 1 ? i : j;
          const auto ax = g.unflatten(own);
          bool interior = true;
          for (int k = 0; k < g.dimension; ++k)
            interior = interior && ax[static_cast<std::size_t>(k)] > 0 &&
                       ax[static_cast<std::size_t>(k)] < g.nx - 1;
          if (!interior)
            continue;
          auto val = [&](int dt_off, std::ptrdiff_t dx_off) {
            const int aa = particle == 1 ? a + dt_off : a;
            const int bb = particle == 2 ? b + dt_off : b;
            const std::size_t ii = particle == 1 ? i + dx_off : i;
            const std::size_t jj = particle == 2 ? j + dx_off : j;
            return f[g.index(aa, bb, ii, jj)];
          };
          const cplx c = val(0, 0);
          cplx r = (val(1, 0) - 2.0 * c + val(-1, 0)) * it2 + mass * mass * c;
          for (int k = 0; k < g.dimension; ++k) {
            const auto s = static_cast<std::ptrdiff_t>(stride[static_cast<std::size_t>(k)]);
            r -= (val(0, s) - 2.0 * c + val(0, -s)) * ix2;
          }
          worst = std::max(worst, std::abs(r));
        }
    }
  return worst;
}

} // namespace mtve
