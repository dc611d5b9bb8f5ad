#pragma once

// Retarded Klein-Gordon Green's functions, the time-symmetric Green's
// function of the wave equation, and the interaction kernels K(x1, x2).
// Natural units (c = hbar = 1). The Heaviside step is H(s) = 1_{s > 0}.

#include "mtve/errors.hpp"
#include "mtve/special_functions.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace mtve {

struct GreensFunctionSpec {
  int dimension = 1;
  double mass = 0.0;

  void validate() const {
    if (dimension < 1 || dimension > 3)
      throw std::invalid_argument("Green's function dimension must be 1, 2 or 3");
    if (!(mass >= 0.0))
      throw std::invalid_argument("Green's function mass must be >= 0");
    if (dimension == 3 && mass != 0.0)
      throw UnsupportedError("d = 3 Green's function is only available for m = 0");
  }
};

enum class KernelFamily {
  constant,
  heaviside_timelike_1d,
  gaussian_lightcone,
  inverse_distance_3d,
  alpha_power_2d,
  custom_bounded,
};

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
  case KernelFamily::constant: return "constant";
  case KernelFamily::heaviside_timelike_1d: return "heaviside_timelike_1d";
  case KernelFamily::gaussian_lightcone: return "gaussian_lightcone";
  case KernelFamily::inverse_distance_3d: return "inverse_distance_3d";
  case KernelFamily::alpha_power_2d: return "alpha_power_2d";
  case KernelFamily::custom_bounded: return "custom_bounded";
  }
  return "unknown";
}

inline std::optional<KernelFamily> kernel_family_from_string(std::string_view s) {
  for (auto f : {KernelFamily::constant, KernelFamily::heaviside_timelike_1d,
                 KernelFamily::gaussian_lightcone, KernelFamily::inverse_distance_3d,
                 KernelFamily::alpha_power_2d, KernelFamily::custom_bounded})
    if (to_string(f) == s)
      return f;
  return std::nullopt;
}

/// Singular families carry only their bounded factor f = amplitude here; the
/// singular factor (1/|x1'-x2'| or s^{-alpha/2}) is applied by the solver.
inline bool is_singular(KernelFamily f) {
  return f == KernelFamily::inverse_distance_3d || f == KernelFamily::alpha_power_2d;
}

using CustomKernel = std::function<double(double t1, std::span<const double> x1,
                                          double t2, std::span<const double> x2)>;

struct KernelSpec {
  KernelFamily family = KernelFamily::constant;
  double amplitude = 1.0;
  double sigma = 1.0; // gaussian_lightcone width
  double alpha = 0.5; // alpha_power_2d exponent, 0 < alpha < 1
  CustomKernel custom;
  std::optional<double> declared_sup_norm; // required for custom_bounded

  void validate() const {
    if (!std::isfinite(amplitude))
      throw std::invalid_argument("kernel amplitude must be finite");
    if (family == KernelFamily::gaussian_lightcone && !(sigma > 0.0))
      throw std::invalid_argument("gaussian_lightcone requires sigma > 0");
    if (family == KernelFamily::alpha_power_2d && !(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("alpha_power_2d requires 0 < alpha < 1");
    if (family == KernelFamily::custom_bounded && !custom)
      throw std::invalid_argument("custom_bounded kernel needs an evaluator");
  }
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("spatial vectors differ in dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a)
    s += v * v;
  return s;
}

inline bool has_nan(double t, std::span<const double> x) {
  if (std::isnan(t))
    return true;
  for (double v : x)
    if (std::isnan(v))
      return true;
  return false;
}

} // namespace detail

/// Minkowski square of the separation, (x^0)^2 - |x|^2.
inline double minkowski_square(double dt, std::span<const double> dx) {
  return dt * dt - detail::squared_norm(dx);
}

/// Retarded Green's function G^ret(dt, dx) for d = 1, 2. Zero outside the
/// open past light cone (dt <= |dx|). d = 3 contains delta(x^2) and has no
/// pointwise value; it is only used in integrated form by the solvers.
inline double greens_retarded(const GreensFunctionSpec &spec, double dt,
                              std::span<const double> dx) {
  spec.validate();
  if (detail::has_nan(dt, dx))
    throw std::invalid_argument("greens_retarded: NaN input");
  if (static_cast<int>(dx.size()) != spec.dimension)
    throw ShapeError("greens_retarded: dx has wrong dimension");
  if (spec.dimension == 3)
    throw UnsupportedError("d = 3 retarded Green's function is distributional");
  if (!(dt > 0.0))
    return 0.0;
  const double s = minkowski_square(dt, dx);
  if (!(s > 0.0))
    return 0.0;
  const double tau = std::sqrt(s);
  if (spec.dimension == 1)
    return 0.5 * bessel_j0(spec.mass * tau);
  return std::cos(spec.mass * tau) / (2.0 * std::numbers::pi * tau);
}

/// Time-symmetric Green's function of the wave equation, d = 1, 2.
inline double greens_symmetric(int dimension, double dt, std::span<const double> dx) {
  if (dimension == 3)
    throw UnsupportedError("d = 3 symmetric Green's function is distributional");
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("greens_symmetric: dimension must be 1 or 2");
  if (detail::has_nan(dt, dx))
    throw std::invalid_argument("greens_symmetric: NaN input");
  if (static_cast<int>(dx.size()) != dimension)
    throw ShapeError("greens_symmetric: dx has wrong dimension");
  const double s = minkowski_square(dt, dx);
  if (!(s > 0.0))
    return 0.0;
  if (dimension == 1)
    return 0.5;
  return 1.0 / (2.0 * std::numbers::pi * std::sqrt(s));
}

/// Analytic sup-norm of a bounded kernel (or of the bounded factor f of a
/// singular family).
inline double certify_sup_norm(const KernelSpec &spec) {
  const double a = std::abs(spec.amplitude);
  switch (spec.family) {
  case KernelFamily::constant:
  case KernelFamily::inverse_distance_3d:
  case KernelFamily::alpha_power_2d:
    return a;
  case KernelFamily::heaviside_timelike_1d:
    return 0.5 * a;
  case KernelFamily::gaussian_lightcone:
    return a * std::pow(2.0 * std::numbers::pi, -1.5) / spec.sigma;
  case KernelFamily::custom_bounded:
    if (!spec.declared_sup_norm)
      throw UnsupportedError("custom_bounded kernel has no declared sup-norm");
    return *spec.declared_sup_norm;
  }
  throw UnsupportedError("unknown kernel family");
}

/// K(t1, x1, t2, x2). For singular families this is the bounded factor only.
inline double interaction_eval(const KernelSpec &spec, double t1,
                               std::span<const double> x1, double t2,
                               std::span<const double> x2) {
  switch (spec.family) {
  case KernelFamily::constant:
  case KernelFamily::inverse_distance_3d:
  case KernelFamily::alpha_power_2d:
    return spec.amplitude;
  case KernelFamily::heaviside_timelike_1d: {
    const double dt = t1 - t2;
    return dt * dt > detail::squared_distance(x1, x2) ? 0.5 * spec.amplitude : 0.0;
  }
  case KernelFamily::gaussian_lightcone: {
    const double dt = t1 - t2;
    const double s = dt * dt - detail::squared_distance(x1, x2);
    return spec.amplitude * std::pow(2.0 * std::numbers::pi, -1.5) / spec.sigma *
           std::exp(-s * s / (2.0 * spec.sigma * spec.sigma));
  }
  case KernelFamily::custom_bounded:
    return spec.custom(t1, x1, t2, x2);
  }
  throw UnsupportedError("unknown kernel family");
}

} // namespace mtve
