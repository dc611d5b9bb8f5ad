#include "mtve/free_solutions.hpp"
#include "mtve/oracle.hpp"
#include "mtve/solvers.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using mtve::cplx;
using mtve::GridSpec;
using mtve::KernelFamily;
using mtve::Quadrature;
using mtve::SolverConfig;
using mtve::WaveField;

namespace {

SolverConfig config(int d, double lambda, KernelFamily fam = KernelFamily::constant) {
  SolverConfig c;
  c.dimension = d;
  c.lambda = lambda;
  c.kernel.family = fam;
  c.mc_samples = 256;
  c.mc_seed = 7;
  return c;
}

WaveField ones(const GridSpec &g) {
  WaveField f(g);
  for (auto &v : f.values())
    v = 1.0;
  return f;
}

WaveField random_field(const GridSpec &g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  WaveField f(g);
  for (auto &v : f.values())
    v = {n(rng), n(rng)};
  return f;
}

std::size_t centre(const GridSpec &g) {
  const int c[3] = {g.nx / 2, g.nx / 2, g.nx / 2};
  return g.flatten(std::span<const int>(c, static_cast<std::size_t>(g.dimension)));
}

struct Case {
  const char *name;
  GridSpec grid;
  SolverConfig cfg;
};

// One small configuration per operator.
std::vector<Case> all_operators() {
  auto c3s = config(3, 0.8, KernelFamily::inverse_distance_3d);
  c3s.mc_samples = 64;
  auto c2a = config(2, 0.8, KernelFamily::alpha_power_2d);
  c2a.mc_samples = 64;
  auto c1 = config(1, 0.8, KernelFamily::gaussian_lightcone);
  c1.m1 = 0.7;
  c1.m2 = 1.3;
  auto c2 = config(2, 0.8, KernelFamily::gaussian_lightcone);
  c2.m1 = 0.4;
  return {{"1d", {1.0, 4, 2.0, 7, 1}, c1},
          {"2d", {1.0, 3, 1.5, 5, 2}, c2},
          {"3d", {1.0, 3, 1.5, 4, 3}, config(3, 0.8, KernelFamily::gaussian_lightcone)},
          {"3d_singular", {1.0, 3, 1.5, 3, 3}, c3s},
          {"2d_alpha", {1.0, 3, 1.5, 4, 2}, c2a}};
}

double max_abs_diff(const WaveField &a, const WaveField &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Per-particle integral of the retarded Green's function over the past cone,
// int_0^t dtau int G(tau, y) d^d y, for d = 1, 2: (1 - cos(m t)) / m^2.
double cone_integral(double m, double t) {
  return m == 0.0 ? 0.5 * t * t : (1.0 - std::cos(m * t)) / (m * m);
}

} // namespace

TEST(Operators, ZeroCouplingGivesZeroField) {
  for (auto c : all_operators()) {
    c.cfg.lambda = 0.0;
    const auto out = mtve::make_operator(c.grid, c.cfg)(random_field(c.grid, 1));
    EXPECT_EQ(mtve::sup_norm(out), 0.0) << c.name;
  }
}

TEST(Operators, InitialTimeSlicesVanish) {
  for (const auto &c : all_operators()) {
    const auto out = mtve::make_operator(c.grid, c.cfg)(random_field(c.grid, 2));
    const std::size_t P = c.grid.points_per_particle();
    for (int k = 0; k < c.grid.nt; ++k)
      for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
          EXPECT_EQ(out.at(0, k, i, j), cplx{}) << c.name;
          EXPECT_EQ(out.at(k, 0, i, j), cplx{}) << c.name;
        }
  }
}

TEST(Operators, LinearityAndCouplingHomogeneity) {
  for (const auto &c : all_operators()) {
    const auto op = mtve::make_operator(c.grid, c.cfg);
    const auto f = random_field(c.grid, 3), h = random_field(c.grid, 4);
    const cplx a(0.5, 1.5), b(-1.0, 0.25);
    const auto lhs = op(mtve::field_combine(f, h, a, b));
    const auto rhs = mtve::field_combine(op(f), op(h), a, b);
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-10 * std::max(1.0, mtve::sup_norm(rhs))) << c.name;

    auto c2 = c.cfg;
    c2.lambda = -3.0 * c.cfg.lambda;
    const auto scaled = mtve::make_operator(c.grid, c2)(f);
    const auto expect = mtve::field_combine(op(f), op(f), -3.0, 0.0);
    EXPECT_LE(max_abs_diff(scaled, expect), 1e-12 * std::max(1.0, mtve::sup_norm(expect))) << c.name;
  }
}

TEST(Operators, Causality) {
  std::mt19937_64 rng(5);
  for (const auto &c : all_operators()) {
    const auto &g = c.grid;
    const auto op = mtve::make_operator(g, c.cfg);
    const auto psi = random_field(g, 6);
    const auto base = op(psi);
    const std::size_t P = g.points_per_particle();
    std::uniform_int_distribution<int> ti(1, g.nt - 1), tj(0, g.nt - 1);
    std::uniform_int_distribution<std::size_t> xi(0, P - 1);
    int tested = 0;
    for (int trial = 0; trial < 400 && tested < 12; ++trial) {
      const int it1 = ti(rng), it2 = ti(rng), jt1 = tj(rng), jt2 = tj(rng);
      const std::size_t ix1 = xi(rng), ix2 = xi(rng), jx1 = xi(rng), jx2 = xi(rng);
      auto outside = [&](int it, std::size_t ix, int jt, std::size_t jx) {
        if (jt > it)
          return true;
        const auto a = g.unflatten(ix), b = g.unflatten(jx);
        std::array<int, 3> o{};
        for (int k = 0; k < g.dimension; ++k)
          o[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k)];
        return !mtve::in_past_cone(it - jt, o, g.dimension, g.dt(), g.dx());
      };
      if (!outside(it1, ix1, jt1, jx1) && !outside(it2, ix2, jt2, jx2))
        continue;
      ++tested;
      auto pert = psi;
      pert.at(jt1, jt2, jx1, jx2) += cplx(10.0, -7.0);
      const auto out = op(pert);
      EXPECT_EQ(out.at(it1, it2, ix1, ix2), base.at(it1, it2, ix1, ix2)) << c.name;
    }
    EXPECT_GT(tested, 0) << c.name;
  }
}

TEST(FirstIterate, ClosedFormMasslessConstantKernel) {
  struct Setup {
    GridSpec g;
    Quadrature q;
    double tol;
  };
  const std::vector<Setup> setups = {{{1.0, 9, 2.0, 33, 1}, Quadrature::deterministic, 0.02},
                                     {{1.0, 4, 1.5, 7, 2}, Quadrature::monte_carlo, 0.05},
                                     {{1.0, 4, 1.5, 5, 3}, Quadrature::monte_carlo, 0.05},
                                     {{1.0, 4, 1.5, 5, 2}, Quadrature::deterministic, 0.05}};
  for (const auto &s : setups) {
    auto cfg = config(s.g.dimension, 1.7);
    cfg.quadrature = s.q;
    const auto out = mtve::make_operator(s.g, cfg)(ones(s.g));
    const std::size_t c = centre(s.g);
    for (int a = 0; a < s.g.nt; ++a)
      for (int b = 0; b < s.g.nt; ++b) {
        const double want = mtve::closed_form_first_iterate(s.g.dimension, 1.7, s.g.t(a), s.g.t(b));
        EXPECT_NEAR(out.at(a, b, c, c).real(), want, s.tol * want + 1e-15)
            << "d=" << s.g.dimension << " a=" << a << " b=" << b;
        EXPECT_NEAR(out.at(a, b, c, c).imag(), 0.0, 1e-15);
      }
  }
}

TEST(FirstIterate, MassiveGreensFunctionOneAndTwoDimensions) {
  for (int d = 1; d <= 2; ++d) {
    // The d = 2 grid and node count stay under the deterministic guard.
    GridSpec g = d == 1 ? GridSpec{1.0, 9, 2.0, 65, 1} : GridSpec{1.0, 3, 1.5, 5, 2};
    auto cfg = config(d, 1.0);
    cfg.m1 = 2.0;
    cfg.m2 = 3.5;
    cfg.quadrature = Quadrature::deterministic;
    cfg.det_nodes = d == 1 ? 16 : 7;
    const auto out = mtve::make_operator(g, cfg)(ones(g));
    const std::size_t c = centre(g);
    for (int a = 1; a < g.nt; ++a)
      for (int b = 1; b < g.nt; ++b) {
        const double want = cone_integral(2.0, g.t(a)) * cone_integral(3.5, g.t(b));
        EXPECT_NEAR(out.at(a, b, c, c).real(), want, 0.02 * std::abs(want) + 2e-3)
            << "d=" << d << " a=" << a << " b=" << b;
      }
  }
}

TEST(FirstIterate, SingularThreeDimensionalSpotValue) {
  GridSpec g{0.5, 3, 1.0, 5, 3};
  auto cfg = config(3, 1.0, KernelFamily::inverse_distance_3d);
  cfg.mc_samples = 200000;
  const auto op = mtve::make_operator_3d_singular(g, cfg);
  const std::size_t c = centre(g);
  const auto est = op.at(ones(g), 2, c, 2, c);
  const double want = mtve::closed_form_singular_3d(1.0, 1.0, 0.5);
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LT(est.std_error, 0.01 * want);
  EXPECT_NEAR(est.value.real(), want, 4.0 * est.std_error);
}

TEST(FirstIterate, AlphaKernelWithinFirstBound) {
  GridSpec g{0.5, 3, 1.5, 7, 2};
  for (double alpha : {0.25, 0.5, 0.75}) {
    auto cfg = config(2, 1.0, KernelFamily::alpha_power_2d);
    cfg.kernel.alpha = alpha;
    cfg.mc_samples = 512;
    const auto psi = ones(g);
    const double n0 = mtve::banach_norm(psi);
    const double got = mtve::banach_norm(mtve::make_operator(g, cfg)(psi));
    EXPECT_GT(got, 0.0);
    EXPECT_LE(got, 1.2 * mtve::bound_2d_alpha(1, n0, cfg.lambda, g.T, alpha)) << alpha;
  }
}

TEST(Operators, UnsupportedCombinations) {
  GridSpec g1{1.0, 3, 1.0, 4, 1};
  EXPECT_THROW(mtve::apply_L_1d(ones(g1), config(1, 1.0, KernelFamily::inverse_distance_3d)),
               std::invalid_argument);
  GridSpec g3{1.0, 3, 1.0, 3, 3};
  auto c3 = config(3, 1.0);
  c3.m1 = 0.1;
  EXPECT_THROW(mtve::apply_L_3d(ones(g3), c3), std::invalid_argument);
  EXPECT_THROW(mtve::apply_L_2d(ones(g1), config(2, 1.0)), mtve::ShapeError);
  EXPECT_THROW(mtve::apply_L_3d_singular(ones(g3), config(3, 1.0)), mtve::UnsupportedError);
  auto ca = config(2, 1.0, KernelFamily::alpha_power_2d);
  ca.kernel.alpha = 1.0;
  EXPECT_THROW(mtve::apply_L_2d_alpha(ones(GridSpec{1.0, 3, 1.0, 3, 2}), ca), std::invalid_argument);
}

TEST(Operators, DeterministicGuard) {
  auto cfg = config(3, 1.0);
  cfg.quadrature = Quadrature::deterministic;
  GridSpec big{1.0, 6, 2.0, 8, 3}; // 36 * 512^2 outputs * 216^2 nodes
  EXPECT_GT(cfg.deterministic_evaluations(big), mtve::deterministic_eval_guard);
  bool found = false;
  for (const auto &d : cfg.diagnostics(big))
    found = found || d.find("monte_carlo") != std::string::npos;
  EXPECT_TRUE(found);
  EXPECT_THROW(mtve::make_operator(big, cfg), std::invalid_argument);
  cfg.quadrature = Quadrature::monte_carlo;
  EXPECT_TRUE(cfg.diagnostics(big).empty());
}

TEST(QuadIdentity2d, MatchesTwoPiTau) {
  for (double tau : {0.5, 1.0, 2.0})
    EXPECT_NEAR(mtve::quad_identity_2d(tau, 512), 2 * std::numbers::pi * tau, 1e-6 * 2 * std::numbers::pi * tau);
  EXPECT_NEAR(mtve::quad_identity_2d(1.0, 512), 6.2831853, 1e-6);
  EXPECT_THROW(mtve::quad_identity_2d(0.0, 8), std::invalid_argument);
}

TEST(Bounds, Examples) {
  EXPECT_EQ(mtve::bound_1d(0, 3.0, 1.0, 1.0, 1.0), 3.0);
  EXPECT_NEAR(mtve::bound_1d(1, 1.0, 1.0, 2.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(mtve::bound_1d(2, 4.0, 0.5, 1.0, 1.0), 0.0104166667, 1e-10);

  EXPECT_EQ(mtve::bound_2d(0, 3.0, 1.0, 1.0, 1.0), 3.0);
  EXPECT_NEAR(mtve::bound_2d(1, 1.0, 2.0, 1.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(mtve::bound_2d(2, 1.0, 1.0, 2.0, 1.0), 0.0416667, 1e-7);

  EXPECT_EQ(mtve::bound_3d(0, 3.0, 1.0, 1.0, 1.0), 3.0);
  EXPECT_NEAR(mtve::bound_3d(1, 1.0, 1.0, 2.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(mtve::bound_3d(2, 3.0, 2.0, 1.0, 1.0), 0.125, 1e-15);

  EXPECT_EQ(mtve::bound_3d_singular(0, 3.0, 1.0, 1.0, 1.0), 3.0);
  EXPECT_NEAR(mtve::bound_3d_singular(1, 1.0, 1.0, 1.0, 1.0), 0.8164966, 1e-7);
  EXPECT_NEAR(mtve::bound_3d_singular(2, 1.0, 1.0, 1.0, 1.0), 0.3333333, 1e-7);

  EXPECT_EQ(mtve::bound_2d_alpha(0, 3.0, 1.0, 0.5, 0.5), 3.0);
  EXPECT_NEAR(mtve::bound_2d_alpha(1, 1.0, 1.0, 0.5, 0.5), 0.0281349, 1e-7);
  EXPECT_THROW(mtve::bound_2d_alpha(1, 1.0, 1.0, 0.5, 1.5), std::invalid_argument);
}

TEST(Bounds, FactorialEventuallyDominates) {
  const double T = 0.5;
  int crossover = -1;
  double prev = mtve::bound_2d_alpha(0, 1.0, 50.0, T, 0.3);
  for (int n = 1; n < 200; ++n) {
    const double b = mtve::bound_2d_alpha(n, 1.0, 50.0, T, 0.3);
    if (b == 0.0) // underflow
      break;
    if (crossover < 0 && b < prev)
      crossover = n;
    if (crossover >= 0)
      EXPECT_LT(b, prev) << n;
    prev = b;
  }
  EXPECT_GT(crossover, 0);
  for (int n = 1; n < 60; ++n) {
    EXPECT_LT(mtve::bound_1d(n + 1, 1.0, 1.0, 100.0, 2.0) / mtve::bound_1d(n, 1.0, 1.0, 100.0, 2.0),
              mtve::bound_1d(n, 1.0, 1.0, 100.0, 2.0) / mtve::bound_1d(n - 1, 1.0, 1.0, 100.0, 2.0));
  }
}

TEST(PowerRadialWeight, ClosedFormAndIndependentQuadrature) {
  EXPECT_NEAR(mtve::power_radial_weight(1.0, 0.5), 2.0 / 3.0, 1e-15);
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double alpha : {0.1, 0.5, 0.9})
    for (double R : {0.3, 1.0, 2.5}) {
      // Integrand r (R^2 - r^2)^{-alpha/2}, written with the distance to the
      // nearer endpoint so the singularity at r = R is resolved.
      auto f = [&](double r, double rc) {
        const double gap = rc > 0.0 ? rc * (R + r) : (R - r) * (R + r);
        return r * std::pow(gap, -0.5 * alpha);
      };
      const double ref = ts.integrate(f, 0.0, R);
      EXPECT_NEAR(mtve::power_radial_weight(R, alpha), ref, 1e-8 * std::max(1.0, ref))
          << alpha << " " << R;
    }
  EXPECT_THROW(mtve::power_radial_weight(1.0, 0.0), std::invalid_argument);
}

TEST(ParticleSampling, WeightsIntegrateTheGreensFunction) {
  // E[weight] over the unit cube equals the cone integral of G (times
  // 2 pi for the unnormalised alpha rule at m = 0).
  const int n = 40;
  for (double m : {0.0, 1.5}) {
    const double t = 0.8;
    double acc = 0.0, acc3 = 0.0;
    for (std::size_t q = 0; q < static_cast<std::size_t>(n) * n * n; ++q) {
      const auto u = mtve::lattice_node(q, n);
      acc += mtve::particle_sample(mtve::ParticleRule::kg_2d, t, m, 0.0, u[0], u[1], u[2]).weight;
      acc3 += mtve::particle_sample(mtve::ParticleRule::wave_3d, t, 0.0, 0.0, u[0], u[1], u[2]).weight;
    }
    const double N3 = static_cast<double>(n) * n * n;
    EXPECT_NEAR(acc / N3, cone_integral(m, t), 2e-3);
    EXPECT_NEAR(acc3 / N3, 0.5 * t * t, 1e-12);
  }
  // alpha rule, m = 0: int_0^t dtau 2 pi tau^{2-alpha}/(2-alpha)
  const double alpha = 0.5, t = 0.8;
  double acc = 0.0;
  for (std::size_t q = 0; q < 64000; ++q) {
    const auto u = mtve::lattice_node(q, 40);
    acc += mtve::particle_sample(mtve::ParticleRule::alpha_2d, t, 0.0, alpha, u[0], u[1], u[2]).weight;
  }
  const double want = 2 * std::numbers::pi * std::pow(t, 3 - alpha) / ((2 - alpha) * (3 - alpha));
  EXPECT_NEAR(acc / 64000, want, 1e-3 * want);
}

TEST(ParticleSampling, SamplesStayInPastCone) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto rule : {mtve::ParticleRule::kg_2d, mtve::ParticleRule::wave_3d, mtve::ParticleRule::alpha_2d})
    for (int i = 0; i < 10000; ++i) {
      const double t = 1.3;
      const auto s = mtve::particle_sample(rule, t, 0.5, 0.5, u(rng), u(rng), u(rng));
      const double r = std::hypot(s.y[0], s.y[1], s.y[2]);
      EXPECT_GE(s.tau, 0.0);
      EXPECT_LE(s.tau, t);
      EXPECT_LE(r, s.tau * (1 + 1e-12));
    }
}

TEST(MonteCarlo, VarianceHalvesWhenSamplesDouble) {
  // Replicate variance of one output value over 20 seeds at S and 2S; the
  // ratio is 2 in expectation and lies within [0.5, 8] with overwhelming
  // probability for 20 replicates.
  struct Setup {
    GridSpec g;
    SolverConfig cfg;
  };
  mtve::FreeSolutionSpec fs;
  fs.p1 = {{0.5, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.5};
  fs.p2 = {{-0.5, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.5};
  fs.nq = 16;
  auto c2 = config(2, 1.0, KernelFamily::gaussian_lightcone);
  c2.m1 = 0.5;
  auto c3 = config(3, 1.0, KernelFamily::gaussian_lightcone);
  auto c3s = config(3, 1.0, KernelFamily::inverse_distance_3d);
  auto c2a = config(2, 1.0, KernelFamily::alpha_power_2d);
  const std::vector<Setup> setups = {{{1.0, 3, 1.5, 6, 2}, c2},
                                     {{1.0, 3, 1.5, 4, 3}, c3},
                                     {{1.0, 3, 1.5, 4, 3}, c3s},
                                     {{1.0, 3, 1.5, 6, 2}, c2a}};
  for (auto s : setups) {
    auto f = fs;
    for (auto *p : {&f.p1, &f.p2}) {
      p->k.resize(static_cast<std::size_t>(s.g.dimension));
      p->x0.resize(static_cast<std::size_t>(s.g.dimension));
    }
    f.m1 = s.cfg.m1;
    f.m2 = s.cfg.m2;
    const auto psi = mtve::generate_free(f, s.g);
    const std::size_t c = centre(s.g);
    auto variance = [&](int S) {
      std::vector<cplx> v;
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto cfg = s.cfg;
        cfg.mc_samples = S;
        cfg.mc_seed = seed * 1000003;
        if (mtve::is_singular(cfg.kernel.family)) {
          const auto op = cfg.dimension == 3 ? mtve::make_operator_3d_singular(s.g, cfg)
                                             : mtve::make_operator_2d_alpha(s.g, cfg);
          v.push_back(op.at(psi, 2, c, 2, c).value);
        } else {
          v.push_back(mtve::make_operator(s.g, cfg)(psi).at(2, 2, c, c));
        }
      }
      cplx mean{};
      for (auto x : v)
        mean += x;
      mean /= 20.0;
      double var = 0.0;
      for (auto x : v)
        var += std::norm(x - mean);
      return var / 19.0;
    };
    const double r = variance(64) / variance(128);
    EXPECT_GT(r, 0.5) << s.cfg.dimension << " " << mtve::to_string(s.cfg.kernel.family);
    EXPECT_LT(r, 8.0) << s.cfg.dimension << " " << mtve::to_string(s.cfg.kernel.family);
    const double r16 = variance(32) / variance(512);
    EXPECT_GT(r16, 4.0);
    EXPECT_LT(r16, 64.0);
  }
}

TEST(MonteCarlo, ReproducibleAndSeedDependent) {
  GridSpec g{1.0, 3, 1.5, 5, 2};
  auto cfg = config(2, 1.0, KernelFamily::gaussian_lightcone);
  const auto psi = random_field(g, 9);
  const auto a = mtve::make_operator(g, cfg)(psi);
  mtve::set_num_threads(3);
  const auto b = mtve::make_operator(g, cfg)(psi);
  mtve::set_num_threads(0);
  EXPECT_EQ(a.values().size(), b.values().size());
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  cfg.mc_seed += 1;
  EXPECT_GT(max_abs_diff(a, mtve::make_operator(g, cfg)(psi)), 0.0);
}

TEST(BoundCompliance, OneDimensionalPacketFixture) {
  GridSpec g{1.0, 8, 3.0, 16, 1};
  mtve::FreeSolutionSpec fs;
  fs.p1 = {{1.0}, {0.0}, 0.25};
  fs.p2 = {{-0.5}, {0.0}, 0.25};
  fs.m1 = fs.m2 = 1.0;
  fs.nq = 64;
  auto cfg = config(1, 0.0, KernelFamily::gaussian_lightcone);
  cfg.m1 = cfg.m2 = 1.0;
  const double sup = mtve::certify_sup_norm(cfg.kernel);
  cfg.lambda = 2.0 / sup; // bound_1d(1) / ||psi_free|| = 0.5
  const auto psi = mtve::generate_free(fs, g);
  const double n0 = mtve::banach_norm(psi);
  EXPECT_NEAR(mtve::bound_1d(1, n0, sup, cfg.lambda, g.T) / n0, 0.5, 1e-12);
  mtve::PicardOptions opt;
  opt.max_iter = 5;
  opt.tol = 1e-300;
  opt.bound = [&](int n) { return mtve::bound_for(cfg, n, n0, g.T); };
  const auto res = mtve::picard_solve(mtve::make_operator(g, cfg), psi,
                                      [](const WaveField &f) { return mtve::banach_norm(f); }, opt);
  ASSERT_EQ(res.report.records.size(), 6u);
  for (const auto &r : res.report.records)
    EXPECT_LE(r.phi_norm, 1.2 * r.bound) << r.n;
}
