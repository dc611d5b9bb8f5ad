#pragma once

// Causal interpolation of a single particle's coordinates.
//
// A quadrature sample at continuous (t', x_out + y) is spread onto grid
// points (j, x_out + o * dx) by linear interpolation in time and multilinear
// interpolation in space. Corners outside the closed past cone of the output
// point (i_out, x_out) are dropped and the remaining weights renormalised, so
// an operator built from these stencils never reads input outside the cone.

#include "mtve/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace mtve {

/// Grid point offset (di = i_out - j >= 0 time steps back, o spatial steps)
/// lies in the closed past cone: |o| dx <= di dt.
inline bool in_past_cone(int di, const std::array<int, 3> &o, int dimension, double dt,
                         double dx) {
  if (di < 0)
    return false;
  long long o2 = 0;
  for (int k = 0; k < dimension; ++k)
    o2 += static_cast<long long>(o[static_cast<std::size_t>(k)]) * o[static_cast<std::size_t>(k)];
  if (o2 == 0)
    return true;
  const double lhs = static_cast<double>(o2) * dx * dx;
  const double rhs = static_cast<double>(di) * di * dt * dt;
  return lhs <= rhs * (1.0 + 1e-12);
}

struct StencilKey {
  int j = 0; // absolute time index of the input slice
  std::array<int, 3> o{0, 0, 0};
  friend auto operator<=>(const StencilKey &, const StencilKey &) = default;
};

/// Interpolation corners of a sample taken tau >= 0 back in time at spatial
/// displacement y from the output point (i_out, x_out); the emitted weights
/// sum to 1.
template <class Fn>
void causal_corners(const GridSpec &g, int i_out, double tau, const std::array<double, 3> &y,
                    Fn &&emit) {
  const int d = g.dimension;
  const double dt = g.dt(), dx = g.dx();
  double ft = (g.t(i_out) - tau) / dt;
  ft = std::clamp(ft, 0.0, static_cast<double>(i_out));
  int j0 = static_cast<int>(std::floor(ft));
  j0 = std::min(j0, i_out);
  const double at = ft - j0;

  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int k = 0; k < d; ++k) {
    const double f = y[static_cast<std::size_t>(k)] / dx;
    const double fl = std::floor(f);
    base[static_cast<std::size_t>(k)] = static_cast<int>(fl);
    frac[static_cast<std::size_t>(k)] = f - fl;
  }

  struct Corner {
    StencilKey key;
    double w;
  };
  std::array<Corner, 16> corners;
  int nc = 0;
  double kept = 0.0;
  for (int tb = 0; tb < 2; ++tb) {
    const int j = j0 + tb;
    const double wt = tb == 0 ? 1.0 - at : at;
    if (wt == 0.0 || j > i_out)
      continue;
    for (int mask = 0; mask < (1 << d); ++mask) {
      double w = wt;
      StencilKey key{j, base};
      for (int k = 0; k < d; ++k) {
        const bool up = (mask >> k) & 1;
        const double fk = frac[static_cast<std::size_t>(k)];
        w *= up ? fk : 1.0 - fk;
        key.o[static_cast<std::size_t>(k)] += up ? 1 : 0;
      }
      if (w == 0.0 || !in_past_cone(i_out - j, key.o, d, dt, dx))
        continue;
      corners[static_cast<std::size_t>(nc++)] = {key, w};
      kept += w;
    }
  }
  if (nc == 0) {
    emit(StencilKey{j0, {0, 0, 0}}, 1.0);
    return;
  }
  for (int c = 0; c < nc; ++c)
    emit(corners[static_cast<std::size_t>(c)].key, corners[static_cast<std::size_t>(c)].w / kept);
}

/// Relative stencil of one output time index: weights keyed by input slice
/// and spatial offset from the output point.
class RelativeStencil {
public:
  RelativeStencil(const GridSpec &g, int i_out) : g_(g), i_out_(i_out) {}

  int i_out() const { return i_out_; }

  /// Adds weight w for a sample taken tau >= 0 back in time at spatial
  /// displacement y from the output point.
  void add_sample(double tau, const std::array<double, 3> &y, double w) {
    if (w == 0.0)
      return;
    causal_corners(g_, i_out_, tau, y, [&](const StencilKey &k, double c) { weights_[k] += w * c; });
  }

  void scale(double s) {
    for (auto &[k, w] : weights_)
      w *= s;
  }

  const std::map<StencilKey, double> &weights() const { return weights_; }
  void add(const StencilKey &k, double w) { weights_[k] += w; }

private:
  GridSpec g_;
  int i_out_;
  std::map<StencilKey, double> weights_;
};

/// Row of a per-particle operator: (input particle index it*P + ix, weight).
using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

/// Turns a relative stencil into the absolute row of output (i_out, ix_out),
/// dropping entries outside the box.
inline SparseRow absolute_row(const GridSpec &g, const RelativeStencil &s, std::size_t ix_out) {
  SparseRow row;
  const auto a = g.unflatten(ix_out);
  const std::size_t P = g.points_per_particle();
  row.reserve(s.weights().size());
  for (const auto &[key, w] : s.weights()) {
    std::array<int, 3> b{0, 0, 0};
    bool inside = true;
    for (int k = 0; k < g.dimension; ++k) {
      const int v = a[static_cast<std::size_t>(k)] + key.o[static_cast<std::size_t>(k)];
      inside = inside && v >= 0 && v < g.nx;
      b[static_cast<std::size_t>(k)] = v;
    }
    if (!inside || w == 0.0)
      continue;
    row.emplace_back(static_cast<std::uint32_t>(static_cast<std::size_t>(key.j) * P + g.flatten(b)), w);
  }
  return row;
}

} // namespace mtve
