#pragma once

// Text outputs: CSV tables with shortest round-trip numbers and the
// sectioned mesh dump.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ddsim/errors.hpp"
#include "ddsim/fvm.hpp"
#include "ddsim/mesh.hpp"
#include "ddsim/scenarios.hpp"

namespace ddsim {

/// Shortest decimal string that parses back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& s) {
  if (s == "inf" || s == "+inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) { row_strings(names); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(format_number(v));
    row_strings(s);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

/// profile.csv: x[,y],psi,v_n,v_p,n_n,n_p[,n_a] per node.
inline void write_profile(std::ostream& os, const DiscreteSystem& sys, const StateVector& u) {
  const auto d = sys.densities(u);
  const bool two_d = sys.mesh().dimension == 2;
  CsvWriter w(os);
  std::vector<std::string> head{"x"};
  if (two_d) head.push_back("y");
  for (const char* c : {"psi", "v_n", "v_p", "n_n", "n_p"}) head.emplace_back(c);
  if (sys.has_ions()) head.emplace_back("n_a");
  w.header(head);
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    const Point c = sys.mesh().cells[k].center;
    std::vector<double> row{c.x};
    if (two_d) row.push_back(c.y);
    for (double v : {u.psi(k), u.v_n(k), u.v_p(k), d.n_n[k], d.n_p[k]}) row.push_back(v);
    if (sys.has_ions()) row.push_back(d.n_a[k]);
    w.row(row);
  }
}

inline void write_sweep(std::ostream& os, const std::string& parameter, const std::vector<SweepRow>& rows) {
  CsvWriter w(os);
  w.header({parameter, "converged", "n_n_max", "n_p_max", "n_a_max", "psi_max", "v_n_max", "v_p_max", "v_a_abs",
            "I_left", "I_right", "bounds_hard_ok", "bounds_certificate_ok"});
  for (const auto& r : rows) {
    w.row({r.value, r.converged ? 1.0 : 0.0, r.norms.n_n, r.norms.n_p, r.norms.n_a, r.norms.psi, r.norms.v_n,
           r.norms.v_p, r.norms.v_a, r.current_left, r.current_right, r.bounds_hard_ok ? 1.0 : 0.0,
           r.bounds_certificate_ok ? 1.0 : 0.0});
  }
}

/// lbic.csv: x0,y0,I. Failed positions carry I = nan.
inline void write_lbic(std::ostream& os, const LbicSignal& signal) {
  CsvWriter w(os);
  w.header({"x0", "y0", "I"});
  for (const auto& p : signal.points) w.row({p.x, p.y, p.converged ? p.current : NAN});
}

// ------------------------------------------------------------- mesh dump

inline constexpr int mesh_dump_version = 1;

inline void write_mesh(std::ostream& os, const FvMesh& m) {
  os << "ddsim-mesh " << mesh_dump_version << '\n';
  os << "dimension " << m.dimension << '\n';
  os << "regions " << m.region_names.size() << '\n';
  for (const auto& r : m.region_names) os << r << '\n';
  os << "boundaries " << m.boundary_names.size() << '\n';
  for (const auto& b : m.boundary_names) os << b << '\n';
  os << "x_lines " << m.x_lines.size() << '\n';
  for (double x : m.x_lines) os << format_number(x) << '\n';
  os << "y_lines " << m.y_lines.size() << '\n';
  for (double y : m.y_lines) os << format_number(y) << '\n';
  os << "nodes " << m.cells.size() << '\n';
  for (const auto& c : m.cells) {
    os << format_number(c.center.x) << ' ' << format_number(c.center.y) << ' ' << format_number(c.volume) << ' '
       << c.region << ' ' << c.pieces.size();
    for (const auto& p : c.pieces) {
      os << ' ' << p.region << ' ' << format_number(p.volume) << ' ' << format_number(p.centroid.x) << ' '
         << format_number(p.centroid.y);
    }
    os << '\n';
  }
  os << "faces " << m.faces.size() << '\n';
  for (const auto& f : m.faces) {
    os << f.left << ' ' << f.right << ' ' << format_number(f.area) << ' ' << format_number(f.distance) << '\n';
  }
  os << "boundary_faces " << m.boundary_faces.size() << '\n';
  for (const auto& b : m.boundary_faces) {
    os << b.cell << ' ' << format_number(b.area) << ' ' << format_number(b.distance) << ' ' << b.tag << '\n';
  }
}

inline FvMesh read_mesh(std::istream& is) {
  auto fail = [](const std::string& what) { return MeshError("mesh dump: " + what); };
  auto expect = [&](const std::string& key) {
    std::string k;
    std::size_t n = 0;
    if (!(is >> k >> n) || k != key) throw fail("expected section '" + key + "'");
    return n;
  };
  auto num = [&]() {
    std::string s;
    if (!(is >> s)) throw fail("truncated");
    return parse_number(s);
  };
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "ddsim-mesh") throw fail("missing header");
  if (version != mesh_dump_version) throw fail("unsupported version " + std::to_string(version));
  FvMesh m;
  m.dimension = static_cast<int>(expect("dimension"));
  m.region_names.resize(expect("regions"));
  for (auto& r : m.region_names) is >> r;
  m.boundary_names.resize(expect("boundaries"));
  for (auto& b : m.boundary_names) is >> b;
  m.x_lines.resize(expect("x_lines"));
  for (auto& x : m.x_lines) x = num();
  m.y_lines.resize(expect("y_lines"));
  for (auto& y : m.y_lines) y = num();
  m.cells.resize(expect("nodes"));
  for (auto& c : m.cells) {
    c.center.x = num();
    c.center.y = num();
    c.volume = num();
    std::size_t pieces = 0;
    if (!(is >> c.region >> pieces)) throw fail("bad node");
    c.pieces.resize(pieces);
    for (auto& p : c.pieces) {
      if (!(is >> p.region)) throw fail("bad piece");
      p.volume = num();
      p.centroid.x = num();
      p.centroid.y = num();
    }
  }
  m.faces.resize(expect("faces"));
  for (auto& f : m.faces) {
    if (!(is >> f.left >> f.right)) throw fail("bad face");
    f.area = num();
    f.distance = num();
  }
  m.boundary_faces.resize(expect("boundary_faces"));
  for (auto& b : m.boundary_faces) {
    if (!(is >> b.cell)) throw fail("bad boundary face");
    b.area = num();
    b.distance = num();
    if (!(is >> b.tag)) throw fail("bad boundary face");
  }
  if (m.dimension == 1) {
    m.bounds = Box::interval(m.x_lines.front(), m.x_lines.back());
  } else {
    m.bounds = Box{{m.x_lines.front(), m.y_lines.front()}, {m.x_lines.back(), m.y_lines.back()}};
  }
  return m;
}

}  // namespace ddsim
