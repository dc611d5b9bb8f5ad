#pragma once

// Run configuration files: INI-style text with [grid], [free], [solver] and
// [outputs] sections. Vectors are comma-separated; slice exports are
// "t2:x2[,x2...]" entries separated by ';'.

#include "mtve/errors.hpp"
#include "mtve/free_solutions.hpp"
#include "mtve/grid.hpp"
#include "mtve/solvers.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mtve {

struct SliceExport {
  int t2 = 0;
  std::vector<int> x2; // one index per spatial axis
};

struct OutputSpec {
  std::string field_path;
  std::string report_path;
  std::string summary_path;
  std::string free_field_path; // optional
  std::vector<SliceExport> slice_exports;
};

struct RunConfig {
  GridSpec grid;
  FreeSolutionSpec free;
  SolverConfig solver;
  OutputSpec outputs;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_vector(const std::vector<double> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    out.push_back(trim(cur));
  return out;
}

/// Reads typed values from a ptree and records every problem.
class Reader {
public:
  Reader(const boost::property_tree::ptree &pt, std::vector<std::string> &diag)
      : pt_(pt), diag_(diag) {}

  template <class T> void get(const std::string &section, const std::string &key, T &out,
                              bool required = false) {
    used_[section].insert(key);
    const auto node = pt_.get_child_optional(section + "." + key);
    if (!node) {
      if (required)
        diag_.push_back(section + "." + key + " is required");
      return;
    }
    const std::string raw = trim(node->data());
    if (!parse(raw, out))
      diag_.push_back(section + "." + key + ": cannot parse '" + raw + "'");
  }

  void get_vector(const std::string &section, const std::string &key, std::vector<double> &out) {
    std::string raw;
    get(section, key, raw);
    if (raw.empty())
      return;
    out.clear();
    for (const auto &item : split(raw, ',')) {
      double v;
      if (!parse(item, v)) {
        diag_.push_back(section + "." + key + ": cannot parse '" + raw + "'");
        out.clear();
        return;
      }
      out.push_back(v);
    }
  }

  /// Reports keys and sections that were never read.
  void report_unknown(const std::set<std::string> &sections) {
    for (const auto &[sec, child] : pt_) {
      if (!sections.count(sec)) {
        diag_.push_back("unknown section [" + sec + "]");
        continue;
      }
      for (const auto &[key, v] : child)
        if (!used_[sec].count(key))
          diag_.push_back("unknown key " + sec + "." + key);
    }
  }

private:
  static bool parse(const std::string &s, std::string &out) {
    out = s;
    return true;
  }
  static bool parse(const std::string &s, double &out) {
    try {
      std::size_t pos = 0;
      out = std::stod(s, &pos);
      return pos == s.size();
    } catch (const std::exception &) {
      return false;
    }
  }
  template <class I>
    requires std::is_integral_v<I>
  static bool parse(const std::string &s, I &out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  }

  const boost::property_tree::ptree &pt_;
  std::vector<std::string> &diag_;
  std::map<std::string, std::set<std::string>> used_;
};

inline std::vector<SliceExport> parse_slices(const std::string &raw,
                                             std::vector<std::string> &diag) {
  std::vector<SliceExport> out;
  if (trim(raw).empty())
    return out;
  for (const auto &entry : split(raw, ';')) {
    if (entry.empty())
      continue;
    const auto colon = entry.find(':');
    SliceExport e;
    bool ok = colon != std::string::npos;
    if (ok) {
      const std::string t = trim(entry.substr(0, colon));
      ok = std::from_chars(t.data(), t.data() + t.size(), e.t2).ec == std::errc();
      for (const auto &x : split(entry.substr(colon + 1), ',')) {
        int v = 0;
        const auto r = std::from_chars(x.data(), x.data() + x.size(), v);
        ok = ok && r.ec == std::errc() && r.ptr == x.data() + x.size();
        e.x2.push_back(v);
      }
    }
    if (!ok) {
      diag.push_back("outputs.slice_exports: cannot parse '" + entry + "'");
      continue;
    }
    out.push_back(e);
  }
  return out;
}

inline bool parent_writable(const std::string &path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  auto parent = fs::absolute(fs::path(path), ec).parent_path();
  if (ec)
    return false;
  return fs::is_directory(parent, ec);
}

} // namespace detail

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> diagnostics; // empty iff the config is runnable
};

/// Full invariant check of an already parsed configuration.
inline std::vector<std::string> check_config(const RunConfig &c) {
  std::vector<std::string> d;
  if (auto msg = c.grid.check(); !msg.empty())
    d.push_back("grid: " + msg);
  if (auto msg = c.free.check(c.grid.dimension); !msg.empty())
    d.push_back(msg);
  for (auto &msg : c.solver.diagnostics(c.grid))
    d.push_back(std::move(msg));
  if (c.grid.check().empty()) {
    const double need = required_box_halfwidth(c.free, c.grid.T);
    if (c.grid.box_halfwidth < need)
      d.push_back("grid: box_halfwidth " + detail::format_double(c.grid.box_halfwidth) +
                  " < 2T + data_halfwidth = " + detail::format_double(need));
    if (c.free.check(c.grid.dimension).empty())
      if (const double tail = packet_tail(c.free, c.grid); tail >= c.free.field_tol)
        d.push_back("free: packet quadrature leaves |psi_free(0)| = " + detail::format_double(tail) +
                    " >= field_tol outside the data region; increase nq or the widths");
    for (const auto &s : c.outputs.slice_exports) {
      bool ok = s.t2 >= 0 && s.t2 < c.grid.nt &&
                static_cast<int>(s.x2.size()) == c.grid.dimension;
      for (int v : s.x2)
        ok = ok && v >= 0 && v < c.grid.nx;
      if (!ok)
        d.push_back("outputs.slice_exports: index out of range");
    }
  }
  for (const auto *p : {&c.outputs.field_path, &c.outputs.report_path, &c.outputs.summary_path})
    if (p->empty())
      d.push_back("outputs: field_path, report_path and summary_path are required");
    else if (!detail::parent_writable(*p))
      d.push_back("outputs: directory of '" + *p + "' does not exist");
  if (!c.outputs.free_field_path.empty() && !detail::parent_writable(c.outputs.free_field_path))
    d.push_back("outputs: directory of '" + c.outputs.free_field_path + "' does not exist");
  return d;
}

inline ParsedConfig parse_config_tree(const boost::property_tree::ptree &pt) {
  ParsedConfig res;
  auto &c = res.config;
  auto &diag = res.diagnostics;
  detail::Reader r(pt, diag);

  r.get("grid", "T", c.grid.T, true);
  r.get("grid", "nt", c.grid.nt, true);
  r.get("grid", "box_halfwidth", c.grid.box_halfwidth, true);
  r.get("grid", "nx", c.grid.nx, true);
  r.get("grid", "dimension", c.grid.dimension, true);

  std::string mode = std::string(to_string(c.free.mode));
  r.get("free", "mode", mode);
  if (auto m = free_mode_from_string(mode))
    c.free.mode = *m;
  else
    diag.push_back("free.mode: unknown mode '" + mode + "'");
  r.get_vector("free", "k1", c.free.p1.k);
  r.get_vector("free", "k2", c.free.p2.k);
  r.get_vector("free", "x0_1", c.free.p1.x0);
  r.get_vector("free", "x0_2", c.free.p2.x0);
  r.get("free", "w1", c.free.p1.width);
  r.get("free", "w2", c.free.p2.width);
  r.get("free", "nq", c.free.nq);
  r.get("free", "field_tol", c.free.field_tol);
  double are = 1.0, aim = 0.0;
  r.get("free", "amplitude_re", are);
  r.get("free", "amplitude_im", aim);
  c.free.amplitude = {are, aim};

  auto &s = c.solver;
  r.get("solver", "lambda", s.lambda, true);
  r.get("solver", "m1", s.m1);
  r.get("solver", "m2", s.m2);
  std::string family = std::string(to_string(s.kernel.family));
  r.get("solver", "kernel", family);
  if (auto f = kernel_family_from_string(family); f && *f != KernelFamily::custom_bounded)
    s.kernel.family = *f;
  else
    diag.push_back("solver.kernel: unknown or non-configurable family '" + family + "'");
  r.get("solver", "amplitude", s.kernel.amplitude);
  r.get("solver", "sigma", s.kernel.sigma);
  r.get("solver", "alpha", s.kernel.alpha);
  std::string quad = std::string(to_string(s.quadrature));
  r.get("solver", "quadrature", quad);
  if (auto q = quadrature_from_string(quad))
    s.quadrature = *q;
  else
    diag.push_back("solver.quadrature: unknown rule '" + quad + "'");
  r.get("solver", "mc_samples", s.mc_samples);
  r.get("solver", "mc_seed", s.mc_seed);
  r.get("solver", "det_nodes", s.det_nodes);
  r.get("solver", "tol", s.tol);
  r.get("solver", "max_iter", s.max_iter);
  s.dimension = c.grid.dimension;
  c.free.m1 = s.m1;
  c.free.m2 = s.m2;

  r.get("outputs", "field_path", c.outputs.field_path, true);
  r.get("outputs", "report_path", c.outputs.report_path, true);
  r.get("outputs", "summary_path", c.outputs.summary_path, true);
  r.get("outputs", "free_field_path", c.outputs.free_field_path);
  std::string slices;
  r.get("outputs", "slice_exports", slices);
  c.outputs.slice_exports = detail::parse_slices(slices, diag);

  r.report_unknown({"grid", "free", "solver", "outputs"});
  if (diag.empty())
    diag = check_config(c);
  return res;
}

inline ParsedConfig parse_config(std::istream &is) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error &e) {
    return {{}, {std::string("config parse error: ") + e.what()}};
  }
  return parse_config_tree(pt);
}

inline ParsedConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    return {{}, {"cannot read config file '" + path + "'"}};
  return parse_config(is);
}

/// Writes a configuration that parses back to an identical RunConfig.
inline void write_config(const RunConfig &c, std::ostream &os) {
  using detail::format_double;
  os << "[grid]\n"
     << "T = " << format_double(c.grid.T) << "\n"
     << "nt = " << c.grid.nt << "\n"
     << "box_halfwidth = " << format_double(c.grid.box_halfwidth) << "\n"
     << "nx = " << c.grid.nx << "\n"
     << "dimension = " << c.grid.dimension << "\n\n";
  os << "[free]\n"
     << "mode = " << to_string(c.free.mode) << "\n";
  if (!c.free.p1.k.empty())
    os << "k1 = " << detail::format_vector(c.free.p1.k) << "\n";
  if (!c.free.p2.k.empty())
    os << "k2 = " << detail::format_vector(c.free.p2.k) << "\n";
  if (!c.free.p1.x0.empty())
    os << "x0_1 = " << detail::format_vector(c.free.p1.x0) << "\n";
  if (!c.free.p2.x0.empty())
    os << "x0_2 = " << detail::format_vector(c.free.p2.x0) << "\n";
  os << "w1 = " << format_double(c.free.p1.width) << "\n"
     << "w2 = " << format_double(c.free.p2.width) << "\n"
     << "nq = " << c.free.nq << "\n"
     << "field_tol = " << format_double(c.free.field_tol) << "\n"
     << "amplitude_re = " << format_double(c.free.amplitude.real()) << "\n"
     << "amplitude_im = " << format_double(c.free.amplitude.imag()) << "\n\n";
  const auto &s = c.solver;
  os << "[solver]\n"
     << "lambda = " << format_double(s.lambda) << "\n"
     << "m1 = " << format_double(s.m1) << "\n"
     << "m2 = " << format_double(s.m2) << "\n"
     << "kernel = " << to_string(s.kernel.family) << "\n"
     << "amplitude = " << format_double(s.kernel.amplitude) << "\n"
     << "sigma = " << format_double(s.kernel.sigma) << "\n"
     << "alpha = " << format_double(s.kernel.alpha) << "\n"
     << "quadrature = " << to_string(s.quadrature) << "\n"
     << "mc_samples = " << s.mc_samples << "\n"
     << "mc_seed = " << s.mc_seed << "\n"
     << "det_nodes = " << s.det_nodes << "\n"
     << "tol = " << format_double(s.tol) << "\n"
     << "max_iter = " << s.max_iter << "\n\n";
  os << "[outputs]\n"
     << "field_path = " << c.outputs.field_path << "\n"
     << "report_path = " << c.outputs.report_path << "\n"
     << "summary_path = " << c.outputs.summary_path << "\n";
  if (!c.outputs.free_field_path.empty())
    os << "free_field_path = " << c.outputs.free_field_path << "\n";
  if (!c.outputs.slice_exports.empty()) {
    os << "slice_exports = ";
    for (std::size_t i = 0; i < c.outputs.slice_exports.size(); ++i) {
      const auto &e = c.outputs.slice_exports[i];
      os << (i ? ";" : "") << e.t2 << ':';
      for (std::size_t k = 0; k < e.x2.size(); ++k)
        os << (k ? "," : "") << e.x2[k];
    }
    os << "\n";
  }
}

} // namespace mtve
