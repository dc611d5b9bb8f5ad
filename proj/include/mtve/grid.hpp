#pragma once

// Uniform grids on [0,T]^2 x [-L,L]^{2d} and multi-time wave fields.
//
// Index order (row-major): t1, t2, x1 axes, x2 axes; within one particle the
// first spatial axis varies slowest. Spatial indices of one particle are
// flattened to ix = (i_0 * nx + i_1) * nx + i_2 (for d = 3).

#include "mtve/errors.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mtve {

using cplx = std::complex<double>;

struct GridSpec {
  double T = 1.0;
  int nt = 2;
  double box_halfwidth = 1.0;
  int nx = 2;
  int dimension = 1;

  double dt() const { return T / (nt - 1); }
  double dx() const { return 2.0 * box_halfwidth / (nx - 1); }
  double t(int i) const { return i * dt(); }
  double x(int i) const { return -box_halfwidth + i * dx(); }

  /// nx^d, the number of spatial points per particle.
  std::size_t points_per_particle() const {
    std::size_t p = 1;
    for (int k = 0; k < dimension; ++k)
      p *= static_cast<std::size_t>(nx);
    return p;
  }
  std::size_t slice_size() const { return points_per_particle() * points_per_particle(); }
  std::size_t size() const {
    return static_cast<std::size_t>(nt) * static_cast<std::size_t>(nt) * slice_size();
  }

  /// Splits a flattened particle index into per-axis indices.
  std::array<int, 3> unflatten(std::size_t ix) const {
    std::array<int, 3> a{0, 0, 0};
    for (int k = dimension - 1; k >= 0; --k) {
      a[k] = static_cast<int>(ix % static_cast<std::size_t>(nx));
      ix /= static_cast<std::size_t>(nx);
    }
    return a;
  }
  std::size_t flatten(std::span<const int> axes) const {
    std::size_t ix = 0;
    for (int k = 0; k < dimension; ++k)
      ix = ix * static_cast<std::size_t>(nx) + static_cast<std::size_t>(axes[k]);
    return ix;
  }
  std::array<double, 3> coords(std::size_t ix) const {
    const auto a = unflatten(ix);
    std::array<double, 3> c{0.0, 0.0, 0.0};
    for (int k = 0; k < dimension; ++k)
      c[k] = x(a[k]);
    return c;
  }

  std::size_t index(int it1, int it2, std::size_t ix1, std::size_t ix2) const {
    const std::size_t p = points_per_particle();
    return ((static_cast<std::size_t>(it1) * nt + static_cast<std::size_t>(it2)) * p + ix1) *
               p +
           ix2;
  }

  /// Empty string if valid, otherwise the first violated invariant.
  std::string check() const {
    if (dimension < 1 || dimension > 3)
      return "dimension must be 1, 2 or 3";
    if (!(T > 0.0) || !std::isfinite(T))
      return "T > 0 required";
    if (nt < 2)
      return "nt >= 2 required";
    if (!(box_halfwidth > 0.0) || !std::isfinite(box_halfwidth))
      return "box_halfwidth > 0 required";
    if (nx < 2)
      return "nx >= 2 required";
    return {};
  }
  void validate() const {
    if (auto msg = check(); !msg.empty())
      throw std::invalid_argument("grid: " + msg);
  }

  friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

class WaveField {
public:
  WaveField() = default;
  explicit WaveField(const GridSpec &spec) : spec_(spec) {
    spec_.validate();
    values_.assign(spec_.size(), cplx{});
  }
  WaveField(const GridSpec &spec, std::vector<cplx> values)
      : spec_(spec), values_(std::move(values)) {
    spec_.validate();
    if (values_.size() != spec_.size())
      throw ShapeError("WaveField: value count does not match grid");
  }

  const GridSpec &spec() const { return spec_; }
  std::size_t size() const { return values_.size(); }
  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }
  cplx &operator[](std::size_t i) { return values_[i]; }
  const cplx &operator[](std::size_t i) const { return values_[i]; }

  cplx &at(int it1, int it2, std::size_t ix1, std::size_t ix2) {
    return values_[checked_index(it1, it2, ix1, ix2)];
  }
  const cplx &at(int it1, int it2, std::size_t ix1, std::size_t ix2) const {
    return values_[checked_index(it1, it2, ix1, ix2)];
  }

  /// Contiguous spatial block for fixed (t1, t2).
  std::span<const cplx> slice(int it1, int it2) const {
    return std::span<const cplx>(values_).subspan(spec_.index(it1, it2, 0, 0),
                                                  spec_.slice_size());
  }

  bool all_finite() const {
    for (const auto &v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        return false;
    return true;
  }

private:
  std::size_t checked_index(int it1, int it2, std::size_t ix1, std::size_t ix2) const {
    const std::size_t p = spec_.points_per_particle();
    if (it1 < 0 || it1 >= spec_.nt || it2 < 0 || it2 >= spec_.nt || ix1 >= p || ix2 >= p)
      throw std::out_of_range("WaveField index out of range");
    return spec_.index(it1, it2, ix1, ix2);
  }

  GridSpec spec_;
  std::vector<cplx> values_;
};

/// Composite trapezoid weights for nx nodes of spacing h.
inline std::vector<double> trapezoid_weights(int n, double h) {
  std::vector<double> w(static_cast<std::size_t>(n), h);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// Trapezoid weights of one particle's box, flattened.
inline std::vector<double> particle_weights(const GridSpec &g) {
  const auto w1 = trapezoid_weights(g.nx, g.dx());
  std::vector<double> w(g.points_per_particle());
  for (std::size_t ix = 0; ix < w.size(); ++ix) {
    const auto a = g.unflatten(ix);
    double p = 1.0;
    for (int k = 0; k < g.dimension; ++k)
      p *= w1[static_cast<std::size_t>(a[k])];
    w[ix] = p;
  }
  return w;
}

namespace detail {
inline double slice_norm(const GridSpec &g, std::span<const cplx> s,
                         const std::vector<double> &w) {
  const std::size_t p = g.points_per_particle();
  double acc = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      row += w[j] * std::norm(s[i * p + j]);
    acc += w[i] * row;
  }
  return std::sqrt(acc);
}
} // namespace detail

inline double l2_slice_norm(const WaveField &f, int it1, int it2) {
  const auto &g = f.spec();
  if (it1 < 0 || it1 >= g.nt || it2 < 0 || it2 >= g.nt)
    throw std::out_of_range("l2_slice_norm: time index out of range");
  return detail::slice_norm(g, f.slice(it1, it2), particle_weights(g));
}

/// Discrete B_d norm: max over time pairs of the spatial L2 norm.
inline double banach_norm(const WaveField &f) {
  const auto &g = f.spec();
  const auto w = particle_weights(g);
  double m = 0.0;
  for (int a = 0; a < g.nt; ++a)
    for (int b = 0; b < g.nt; ++b) {
      const double v = detail::slice_norm(g, f.slice(a, b), w);
      if (std::isnan(v))
        return v;
      m = std::max(m, v);
    }
  return m;
}

inline double sup_norm(const WaveField &f) {
  double m = 0.0;
  for (const auto &v : f.values())
    m = std::max(m, std::abs(v));
  return m;
}

inline WaveField field_combine(const WaveField &a, const WaveField &b, cplx ca, cplx cb) {
  if (!(a.spec() == b.spec()))
    throw ShapeError("field_combine: grid mismatch");
  WaveField out(a.spec());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = ca * a[i] + cb * b[i];
  return out;
}

// ---- binary format --------------------------------------------------------
//
// "MTVE", u32 version, u32 dimension, u32 nt, u32 nx, f64 T, f64 L, then
// size() pairs of little-endian float32 (re, im) in index order.

inline constexpr std::uint32_t field_format_version = 1;

namespace detail {
template <class T> void put_le(std::ostream &os, T v) {
  static_assert(std::endian::native == std::endian::little,
                "field IO assumes a little-endian host");
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}
template <class T> T get_le(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is)
    throw std::runtime_error("field file truncated");
  return v;
}
} // namespace detail

inline void write_field(const WaveField &f, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path + " for writing");
  const auto &g = f.spec();
  os.write("MTVE", 4);
  detail::put_le<std::uint32_t>(os, field_format_version);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dimension));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nt));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx));
  detail::put_le<double>(os, g.T);
  detail::put_le<double>(os, g.box_halfwidth);
  std::vector<float> buf(2 * f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    buf[2 * i] = static_cast<float>(f[i].real());
    buf[2 * i + 1] = static_cast<float>(f[i].imag());
  }
  os.write(reinterpret_cast<const char *>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os)
    throw std::runtime_error("write failed: " + path);
}

inline WaveField read_field(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MTVE", 4) != 0)
    throw std::runtime_error(path + ": not an MTVE field file");
  if (detail::get_le<std::uint32_t>(is) != field_format_version)
    throw std::runtime_error(path + ": unsupported format version");
  GridSpec g;
  g.dimension = static_cast<int>(detail::get_le<std::uint32_t>(is));
  g.nt = static_cast<int>(detail::get_le<std::uint32_t>(is));
  g.nx = static_cast<int>(detail::get_le<std::uint32_t>(is));
  g.T = detail::get_le<double>(is);
  g.box_halfwidth = detail::get_le<double>(is);
  g.validate();
  std::vector<float> buf(2 * g.size());
  is.read(reinterpret_cast<char *>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!is)
    throw std::runtime_error(path + ": field data truncated");
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = {buf[2 * i], buf[2 * i + 1]};
  return WaveField(g, std::move(v));
}

/// Long-format CSV of psi(t1, x1, t2 = t_{it2}, x2 = x_{ix2}):
/// columns t1, x1 coordinates, re, im, abs.
inline void write_slice_csv(const WaveField &f, int it2, std::size_t ix2, std::ostream &os) {
  const auto &g = f.spec();
  if (it2 < 0 || it2 >= g.nt || ix2 >= g.points_per_particle())
    throw std::out_of_range("slice index out of range");
  static constexpr const char *axis[] = {"x1", "y1", "z1"};
  os << "t1";
  for (int k = 0; k < g.dimension; ++k)
    os << ',' << axis[k];
  os << ",re,im,abs\n";
  os << std::setprecision(9);
  for (int it1 = 0; it1 < g.nt; ++it1)
    for (std::size_t ix1 = 0; ix1 < g.points_per_particle(); ++ix1) {
      const auto c = g.coords(ix1);
      const cplx v = f.at(it1, it2, ix1, ix2);
      os << g.t(it1);
      for (int k = 0; k < g.dimension; ++k)
        os << ',' << c[static_cast<std::size_t>(k)];
      os << ',' << v.real() << ',' << v.imag() << ',' << std::abs(v) << '\n';
    }
}

} // namespace mtve
