#pragma once

// Bessel functions of the first kind, orders 0 and 1, for real arguments.
//
// |x| <= 8 : truncated power series
//     J0(x) = sum_k (-1)^k (x/2)^{2k}     / (k!)^2
//     J1(x) = sum_k (-1)^k (x/2)^{2k+1}   / (k! (k+1)!)
// |x| >  8 : Miller backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1},
//     normalised with J0 + 2 sum_k J_{2k} = 1.
//
// |x| > 1e4: leading terms of the Hankel asymptotic expansion.
//
// All branches are accurate to ~1e-14 absolute up to |x| = 100.

#include <cmath>
#include <utility>

namespace mtve {

struct BesselAccuracy {
  double abs_tol = 1e-10;
  double max_argument = 100.0;
};

inline constexpr BesselAccuracy bessel_accuracy{};

namespace detail {

inline constexpr double bessel_series_limit = 8.0;

inline double bessel_j0_series(double x) {
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 2)
      break;
  }
  return sum;
}

inline double bessel_j1_series(double x) {
  const double q = -0.25 * x * x;
  double term = 0.5 * x;
  double sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 2)
      break;
  }
  return sum;
}

// Returns (J0(x), J1(x)) for x > 0 by backward recurrence.
inline std::pair<double, double> bessel_j01_miller(double x) {
  int start = static_cast<int>(x + 40.0 + 6.0 * std::sqrt(x));
  start += start % 2; // normalisation sum needs an even start
  constexpr double rescale = 1e250;

  double jk1 = 0.0;   // J_{k+1}
  double jk = 1e-300; // J_k, arbitrary seed
  double norm = 0.0;
  double j0 = 0.0, j1 = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jm1 = (2.0 * k / x) * jk - jk1;
    jk1 = jk;
    jk = jm1; // now J_{k-1}
    if (std::abs(jk) > rescale) {
      jk /= rescale;
      jk1 /= rescale;
      norm /= rescale;
    }
    if ((k - 1) % 2 == 0 && k - 1 > 0)
      norm += 2.0 * jk;
    if (k == 1) {
      j0 = jk;
      j1 = jk1;
    }
  }
  norm += j0;
  return {j0 / norm, j1 / norm};
}

inline constexpr double bessel_hankel_limit = 1e4;

inline std::pair<double, double> bessel_j01_hankel(double x) {
  if (std::isinf(x))
    return {0.0, 0.0};
  constexpr double pi = 3.14159265358979323846;
  const double z = 1.0 / x;
  const double z2 = z * z;
  const double amp = std::sqrt(2.0 / (pi * x));
  const double p0 = 1.0 - 9.0 / 128.0 * z2;
  const double q0 = -0.125 * z + 75.0 / 1024.0 * z2 * z;
  const double p1 = 1.0 + 15.0 / 128.0 * z2;
  const double q1 = 0.375 * z - 105.0 / 1024.0 * z2 * z;
  const double c0 = x - 0.25 * pi;
  const double c1 = x - 0.75 * pi;
  return {amp * (p0 * std::cos(c0) - q0 * std::sin(c0)),
          amp * (p1 * std::cos(c1) - q1 * std::sin(c1))};
}

inline std::pair<double, double> bessel_j01_positive(double ax) {
  if (ax <= bessel_series_limit)
    return {bessel_j0_series(ax), bessel_j1_series(ax)};
  if (ax <= bessel_hankel_limit)
    return bessel_j01_miller(ax);
  return bessel_j01_hankel(ax);
}

} // namespace detail

/// J0, even in x.
inline double bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax <= detail::bessel_series_limit)
    return detail::bessel_j0_series(ax);
  return detail::bessel_j01_positive(ax).first;
}

/// J1, odd in x.
inline double bessel_j1(double x) {
  const double ax = std::abs(x);
  const double v = ax <= detail::bessel_series_limit
                       ? detail::bessel_j1_series(ax)
                       : detail::bessel_j01_positive(ax).second;
  return x < 0 ? -v : v;
}

} // namespace mtve
