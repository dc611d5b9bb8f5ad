#include "mtve/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using mtve::GreensFunctionSpec;
using mtve::KernelFamily;
using mtve::KernelSpec;

namespace {
std::vector<double> v(std::initializer_list<double> x) { return x; }
} // namespace

TEST(GreensRetarded, Values) {
  EXPECT_DOUBLE_EQ(mtve::greens_retarded({1, 0.0}, 2.0, v({1.0})), 0.5);
  EXPECT_EQ(mtve::greens_retarded({1, 1.0}, 1.0, v({2.0})), 0.0);
  EXPECT_NEAR(mtve::greens_retarded({2, 0.0}, 1.0, v({0.6, 0.0})), 1.0 / (2 * std::numbers::pi * 0.8),
              1e-12);
  EXPECT_NEAR(mtve::greens_retarded({2, 0.0}, 1.0, v({0.6, 0.0})), 0.1989436789, 1e-10);
}

TEST(GreensRetarded, MassiveValues) {
  // J0(m sqrt(s)) / 2 with s = 9 - 1, m = 0.5
  const double s = std::sqrt(8.0);
  EXPECT_NEAR(mtve::greens_retarded({1, 0.5}, 3.0, v({1.0})), 0.5 * mtve::bessel_j0(0.5 * s), 1e-15);
  EXPECT_NEAR(mtve::greens_retarded({2, 2.0}, 2.0, v({1.0, 1.0})),
              std::cos(2.0 * std::sqrt(2.0)) / (2 * std::numbers::pi * std::sqrt(2.0)), 1e-15);
}

TEST(GreensRetarded, Errors) {
  EXPECT_THROW(mtve::greens_retarded({3, 0.0}, 1.0, v({0, 0, 0})), mtve::UnsupportedError);
  EXPECT_THROW(mtve::greens_retarded({1, 0.0}, NAN, v({0})), std::invalid_argument);
  EXPECT_THROW(mtve::greens_retarded({1, 0.0}, 1.0, v({NAN})), std::invalid_argument);
  EXPECT_THROW(mtve::greens_retarded({1, 0.0}, 1.0, v({0, 0})), mtve::ShapeError);
  EXPECT_THROW((GreensFunctionSpec{3, 0.1}.validate()), mtve::UnsupportedError);
}

TEST(GreensRetarded, CausalSupport) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int d = 1; d <= 2; ++d)
    for (int i = 0; i < 20000; ++i) {
      std::vector<double> dx(static_cast<std::size_t>(d));
      double r2 = 0.0;
      for (auto &x : dx) {
        x = u(rng);
        r2 += x * x;
      }
      const double dt = u(rng);
      if (dt < std::sqrt(r2) || dt < 0.0)
        EXPECT_EQ(mtve::greens_retarded({d, 0.7}, dt, dx), 0.0);
    }
}

TEST(GreensRetarded, ContinuousAtLightConeFromInside) {
  for (double m : {0.0, 0.5, 3.0})
    for (double eps : {1e-4, 1e-6, 1e-8}) {
      const double dx = 0.75;
      EXPECT_NEAR(mtve::greens_retarded({1, m}, dx + eps, v({dx})), 0.5, 10 * m * m * eps + 1e-15);
    }
}

TEST(GreensSymmetric, Values) {
  EXPECT_EQ(mtve::greens_symmetric(1, -3.0, v({1.0})), 0.5);
  EXPECT_EQ(mtve::greens_symmetric(1, 1.0, v({5.0})), 0.0);
  EXPECT_DOUBLE_EQ(mtve::greens_symmetric(2, 1.0, v({0.0, 0.0})), 1.0 / (2 * std::numbers::pi));
  EXPECT_THROW(mtve::greens_symmetric(3, 1.0, v({0, 0, 0})), mtve::UnsupportedError);
}

TEST(GreensSymmetric, TimeSymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int d = 1; d <= 2; ++d)
    for (int i = 0; i < 5000; ++i) {
      std::vector<double> dx(static_cast<std::size_t>(d));
      for (auto &x : dx)
        x = u(rng);
      const double dt = u(rng);
      EXPECT_EQ(mtve::greens_symmetric(d, dt, dx), mtve::greens_symmetric(d, -dt, dx));
    }
}

TEST(InteractionKernel, Values) {
  KernelSpec g{KernelFamily::gaussian_lightcone, 1.0, 1.0};
  EXPECT_NEAR(mtve::interaction_eval(g, 0.3, v({0.2}), 0.3, v({0.2})), 0.0634936359, 1e-10);
  KernelSpec h{KernelFamily::heaviside_timelike_1d, 1.0};
  EXPECT_EQ(mtve::interaction_eval(h, 1.0, v({0.0}), 3.0, v({1.0})), 0.5);
  EXPECT_EQ(mtve::interaction_eval(h, 1.0, v({0.0}), 1.5, v({1.0})), 0.0);
  KernelSpec c{KernelFamily::constant, 0.0};
  EXPECT_EQ(mtve::interaction_eval(c, 0.1, v({1, 2}), 0.4, v({3, 4})), 0.0);
}

TEST(InteractionKernel, SupNorms) {
  EXPECT_EQ(mtve::certify_sup_norm({KernelFamily::constant, 2.0}), 2.0);
  EXPECT_EQ(mtve::certify_sup_norm({KernelFamily::heaviside_timelike_1d, 1.0}), 0.5);
  KernelSpec g{KernelFamily::gaussian_lightcone, 1.0, 0.5};
  EXPECT_NEAR(mtve::certify_sup_norm(g), 0.1269872718, 1e-10);
  EXPECT_NEAR(mtve::certify_sup_norm(g), 2.0 * std::pow(2 * std::numbers::pi, -1.5), 1e-15);
  KernelSpec custom{KernelFamily::custom_bounded, 1.0};
  custom.custom = [](double, std::span<const double>, double, std::span<const double>) { return 0.1; };
  EXPECT_THROW(mtve::certify_sup_norm(custom), mtve::UnsupportedError);
  custom.declared_sup_norm = 0.2;
  EXPECT_EQ(mtve::certify_sup_norm(custom), 0.2);
}

TEST(InteractionKernel, NeverExceedsCertifiedSupNorm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0), t(0.0, 3.0);
  std::vector<KernelSpec> specs = {{KernelFamily::constant, -1.5},
                                   {KernelFamily::heaviside_timelike_1d, 2.0},
                                   {KernelFamily::gaussian_lightcone, 1.0, 0.3},
                                   {KernelFamily::gaussian_lightcone, -2.0, 2.0}};
  for (const auto &s : specs) {
    const double sup = mtve::certify_sup_norm(s);
    for (int d = 1; d <= 3; ++d)
      for (int i = 0; i < 100000 / 3; ++i) {
        std::vector<double> x1(static_cast<std::size_t>(d)), x2(static_cast<std::size_t>(d));
        for (auto &x : x1)
          x = u(rng);
        for (auto &x : x2)
          x = u(rng);
        EXPECT_LE(std::abs(mtve::interaction_eval(s, t(rng), x1, t(rng), x2)), sup * (1 + 1e-15));
      }
  }
}

TEST(InteractionKernel, GaussianMaximumOnNullSeparation) {
  KernelSpec g{KernelFamily::gaussian_lightcone, 1.0, 0.5};
  const double sup = mtve::certify_sup_norm(g);
  EXPECT_NEAR(mtve::interaction_eval(g, 2.0, v({0.0, 0.0}), 1.0, v({0.6, 0.8})), sup, 1e-15);
}

TEST(InteractionKernel, Validation) {
  KernelSpec a{KernelFamily::alpha_power_2d, 1.0, 1.0, 1.5};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.alpha = 0.5;
  EXPECT_NO_THROW(a.validate());
  EXPECT_TRUE(mtve::is_singular(KernelFamily::inverse_distance_3d));
  EXPECT_FALSE(mtve::is_singular(KernelFamily::gaussian_lightcone));
  EXPECT_EQ(mtve::kernel_family_from_string("heaviside_timelike_1d"), KernelFamily::heaviside_timelike_1d);
  EXPECT_FALSE(mtve::kernel_family_from_string("nope").has_value());
}
