#pragma once

// A-priori bounds: Stampacchia threshold, the explicit density bound N-bar,
// potential bounds, and their verification on computed states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ddsim/errors.hpp"
#include "ddsim/fvm.hpp"

namespace ddsim {

/// x* = x0 + zeta^{1/alpha} beta^{beta/(beta-1)} / (beta-1) E0^{(beta-1)/alpha}.
/// A non-increasing E >= 0 with E(y) <= zeta E(x)^beta / (y-x)^alpha for all
/// y > x >= x0 vanishes beyond x*.
inline double stampacchia_root(double x0, double zeta, double alpha, double beta, double e0) {
  if (!(zeta > 0.0) || !(alpha > 0.0) || !(beta > 1.0) || !(e0 >= 0.0) || !std::isfinite(x0)) {
    throw DomainError("stampacchia_root needs zeta > 0, alpha > 0, beta > 1, E0 >= 0");
  }
  if (e0 == 0.0) return x0;
  return x0 + std::pow(zeta, 1.0 / alpha) * std::pow(beta, beta / (beta - 1.0)) / (beta - 1.0) *
                  std::pow(e0, (beta - 1.0) / alpha);
}

/// User-side constants of the bound machinery.
struct BoundsConfig {
  double p = std::numeric_limits<double>::infinity();  ///< integrability exponent
  double structural_constant = 1.0;                    ///< K in N-bar
  double k_q = 1.0;                                    ///< embedding constants
  double k_r = 1.0;
  double r0 = -1.0;  ///< rate bound; negative means derive it from the recombination model

  bool operator==(const BoundsConfig&) const = default;
};

struct BoundInputs {
  double boundary_density = 1.0;  ///< N^D
  double norm_generation = 0.0;   ///< ||G||_p
  double norm_doping = 0.0;       ///< ||C||_p
  double norm_charge = 0.0;       ///< || |C| + |z_a| S_a ||_p
  double norm_generation_r0 = 0.0;  ///< ||G + r0||_p
  double p = std::numeric_limits<double>::infinity();
  int dimension = 1;
  double r0 = 0.0;
  double debye_length = 1.0;
  int ion_charge = 0;
  double ion_saturation = 0.0;
  double k_q = 1.0;
  double k_r = 1.0;
  double structural_constant = 1.0;
  double measure = 1.0;  ///< |Omega|

  void validate() const {
    if (!(p > 0.5 * dimension) || !(p >= 1.0)) throw DomainError("need p >= 1 and p > d/2");
    if (!(debye_length > 0.0)) throw DomainError("Debye length must be positive");
    if (!(boundary_density > 0.0)) throw DomainError("N^D must be positive");
    for (double v : {norm_generation, norm_doping, norm_charge, norm_generation_r0, r0, k_q, k_r,
                     structural_constant, measure}) {
      if (!(v >= 0.0) || std::isnan(v)) throw DomainError("bound inputs must be nonnegative");
    }
  }
};

/// N-bar = N^D exp(K ((||C|| + |z_a| S_a) / lambda^2 + (||G||^{1/2} + r0^{1/2}) / (N^D)^{1/2})).
inline double density_upper_bound(const BoundInputs& in) {
  in.validate();
  const double sat = in.ion_charge != 0 ? std::abs(in.ion_charge) * in.ion_saturation : 0.0;
  const double exponent = (in.norm_doping + sat) / (in.debye_length * in.debye_length) +
                          (std::sqrt(in.norm_generation) + std::sqrt(in.r0)) / std::sqrt(in.boundary_density);
  return in.boundary_density * std::exp(in.structural_constant * exponent);
}

struct StampacchiaParameters {
  double zeta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double x0 = 0.0;
  double e0 = 0.0;
  double threshold = 0.0;  ///< x*, so exp(x*) bounds the densities
};

/// Parameters of the level-set recursion for log-densities with q = 2p/(p-1)
/// and the choice r = 2q (so alpha = 4, beta = 2).
inline StampacchiaParameters stampacchia_parameters(const BoundInputs& in) {
  in.validate();
  const double q = std::isinf(in.p) ? 2.0 : 2.0 * in.p / (in.p - 1.0);
  const double r = 2.0 * q;
  StampacchiaParameters s;
  s.alpha = 2.0 * r / q;
  s.beta = r / q;
  const double kr = std::pow(in.k_r, 2.0 * r / q);
  const double l4 = std::pow(in.debye_length, 4);
  s.zeta = kr * (in.k_q * in.k_q / l4 * in.norm_charge * in.norm_charge +
                 2.0 / in.boundary_density * in.norm_generation_r0);
  s.x0 = std::log(in.boundary_density);
  s.e0 = kr > 0.0 ? 2.0 * s.zeta * std::pow(in.measure, 2.0 / q) / kr : 0.0;
  s.threshold = s.zeta > 0.0 ? stampacchia_root(s.x0, s.zeta, s.alpha, s.beta, s.e0) : s.x0;
  return s;
}

struct BoundCertificate {
  BoundInputs inputs;
  double density = 0.0;  ///< N-bar
  double potential = 0.0;  ///< M-bar_psi
  double quasi_fermi = 0.0;  ///< M-bar_v
  double ion_potential = 0.0;  ///< M-bar_a
  StampacchiaParameters stampacchia;
};

namespace detail {

inline double lp_norm(const std::vector<double>& values, const std::vector<double>& weights, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * std::pow(std::fabs(values[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace detail

/// Collects norms by midpoint quadrature over the region pieces of the mesh.
inline BoundInputs bound_inputs(const DiscreteSystem& sys, const BoundsConfig& cfg = {}) {
  const DeviceScenario& s = sys.scenario();
  const FvMesh& m = sys.mesh();
  BoundInputs in;
  in.p = cfg.p;
  in.dimension = m.dimension;
  in.debye_length = s.debye_length;
  in.ion_charge = s.ions.charge;
  in.ion_saturation = s.ions.active() ? s.ions.statistics.saturation() : 0.0;
  in.k_q = cfg.k_q;
  in.k_r = cfg.k_r;
  in.structural_constant = cfg.structural_constant;
  in.measure = m.measure();
  if (cfg.r0 >= 0.0) {
    in.r0 = cfg.r0;
  } else {
    const double b = s.recombination.rate_bound();
    in.r0 = std::isfinite(b) ? b : s.recombination.radiative;
  }
  std::vector<double> w, g, c, charge, g_r0;
  const double sat = s.ions.active() ? std::abs(s.ions.charge) * in.ion_saturation : 0.0;
  for (const auto& cell : m.cells) {
    for (const auto& piece : cell.pieces) {
      w.push_back(piece.volume);
      const double gv = s.generation(piece.centroid);
      const double cv = s.doping[piece.region];
      g.push_back(gv);
      c.push_back(cv);
      charge.push_back(std::fabs(cv) + sat);
      g_r0.push_back(gv + in.r0);
    }
  }
  in.norm_generation = detail::lp_norm(g, w, in.p);
  in.norm_doping = detail::lp_norm(c, w, in.p);
  in.norm_charge = detail::lp_norm(charge, w, in.p);
  in.norm_generation_r0 = detail::lp_norm(g_r0, w, in.p);
  double nd = 0.0;
  for (const auto& contact : s.contacts) {
    nd = std::max(nd, s.electrons(contact.v_n + contact.psi));
    nd = std::max(nd, s.holes(contact.v_p - contact.psi));
  }
  in.boundary_density = nd;
  return in;
}

/// Full certificate. The potential bound compares psi with the quadratic
/// barrier in x that solves -lambda^2 w'' = |rhs|max between the contacts.
inline BoundCertificate bound_certificate(const DiscreteSystem& sys, const BoundsConfig& cfg = {}) {
  const DeviceScenario& s = sys.scenario();
  BoundCertificate cert;
  cert.inputs = bound_inputs(sys, cfg);
  cert.density = density_upper_bound(cert.inputs);
  cert.stampacchia = stampacchia_parameters(cert.inputs);
  double psi_d = 0.0, v_d = 0.0;
  for (const auto& c : s.contacts) {
    psi_d = std::max(psi_d, std::fabs(c.psi));
    v_d = std::max({v_d, std::fabs(c.v_n), std::fabs(c.v_p)});
  }
  double c_max = 0.0;
  for (double c : s.doping) c_max = std::max(c_max, std::fabs(c));
  const double sat = s.ions.active() ? std::abs(s.ions.charge) * cert.inputs.ion_saturation : 0.0;
  const double length = sys.mesh().bounds.hi.x - sys.mesh().bounds.lo.x;
  const double lambda2 = s.debye_length * s.debye_length;
  cert.potential = psi_d + (c_max + 2.0 * cert.density + sat) * length * length / (8.0 * lambda2);
  cert.quasi_fermi = std::max({s.electrons.inverse(cert.density) + cert.potential,
                               s.holes.inverse(cert.density) + cert.potential, v_d});
  if (s.ions.active()) {
    cert.ion_potential = std::fabs(s.ions.statistics.inverse(s.ions.mass / sys.ion_measure())) +
                         std::abs(s.ions.charge) * cert.potential;
  }
  return cert;
}

struct LinfNorms {
  double n_n = 0.0;
  double n_p = 0.0;
  double n_a = 0.0;
  double psi = 0.0;
  double v_n = 0.0;
  double v_p = 0.0;
  double v_a = 0.0;
  double grad_psi = 0.0;  ///< max |difference quotient| over faces
  double grad_v_n = 0.0;
  double grad_v_p = 0.0;
};

inline LinfNorms linf_norms(const DiscreteSystem& sys, const StateVector& u) {
  const auto d = sys.densities(u);
  LinfNorms out;
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    out.n_n = std::max(out.n_n, d.n_n[k]);
    out.n_p = std::max(out.n_p, d.n_p[k]);
    if (!d.n_a.empty()) out.n_a = std::max(out.n_a, d.n_a[k]);
    out.psi = std::max(out.psi, std::fabs(u.psi(k)));
    out.v_n = std::max(out.v_n, std::fabs(u.v_n(k)));
    out.v_p = std::max(out.v_p, std::fabs(u.v_p(k)));
  }
  out.v_a = std::fabs(u.v_a());
  for (const Face& f : sys.mesh().faces) {
    const auto k = static_cast<std::size_t>(f.left), l = static_cast<std::size_t>(f.right);
    out.grad_psi = std::max(out.grad_psi, std::fabs(u.psi(l) - u.psi(k)) / f.distance);
    out.grad_v_n = std::max(out.grad_v_n, std::fabs(u.v_n(l) - u.v_n(k)) / f.distance);
    out.grad_v_p = std::max(out.grad_v_p, std::fabs(u.v_p(l) - u.v_p(k)) / f.distance);
  }
  return out;
}

struct BoundVerdict {
  std::string quantity;
  bool hard = false;  ///< hard checks fail the run; certificate checks only warn
  bool passed = true;
  double worst = 0.0;   ///< worst value found
  double limit = 0.0;   ///< bound it is compared with
  double margin = 0.0;  ///< limit - worst (positive is good)
  long cell = -1;       ///< node of the worst value
};

struct BoundReport {
  std::vector<BoundVerdict> verdicts;

  bool hard_ok() const {
    for (const auto& v : verdicts) {
      if (v.hard && !v.passed) return false;
    }
    return true;
  }
  bool certificate_ok() const {
    for (const auto& v : verdicts) {
      if (!v.passed) return false;
    }
    return true;
  }
  const BoundVerdict* find(const std::string& quantity) const {
    for (const auto& v : verdicts) {
      if (v.quantity == quantity) return &v;
    }
    return nullptr;
  }
};

/// Per-field densities and potentials, taken as given (no state equation).
struct FieldValues {
  std::vector<double> psi, v_n, v_p, n_n, n_p, n_a;
  double v_a = 0.0;
  bool ions = false;
};

inline FieldValues field_values(const DiscreteSystem& sys, const StateVector& u) {
  FieldValues f;
  const auto d = sys.densities(u);
  f.n_n = d.n_n;
  f.n_p = d.n_p;
  f.n_a = d.n_a;
  f.ions = sys.has_ions();
  f.v_a = u.v_a();
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    f.psi.push_back(u.psi(k));
    f.v_n.push_back(u.v_n(k));
    f.v_p.push_back(u.v_p(k));
  }
  return f;
}

inline BoundReport verify_field_bounds(const DiscreteSystem& sys, const FieldValues& f, const BoundCertificate& cert) {
  BoundReport rep;
  const std::size_t n = f.psi.size();
  auto worst_of = [&](const std::vector<double>& v, bool abs_value, bool minimum, const std::vector<char>* mask) {
    std::pair<double, long> w{minimum ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), -1};
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (mask && !(*mask)[k]) continue;
      const double x = abs_value ? std::fabs(v[k]) : v[k];
      if (minimum ? x < w.first : x > w.first) w = {x, static_cast<long>(k)};
    }
    return w;
  };
  auto upper = [&](std::string name, bool hard, std::pair<double, long> w, double limit, bool strict) {
    const bool ok = w.second < 0 || (strict ? w.first < limit : w.first <= limit);
    rep.verdicts.push_back({std::move(name), hard, ok, w.first, limit, limit - w.first, w.second});
  };
  auto positive = [&](std::string name, std::pair<double, long> w) {
    const bool ok = w.second < 0 || (w.first > 0.0 && std::isfinite(w.first));
    rep.verdicts.push_back({std::move(name), true, ok, w.first, 0.0, w.first, w.second});
  };
  positive("n_n positive", worst_of(f.n_n, false, true, nullptr));
  positive("n_p positive", worst_of(f.n_p, false, true, nullptr));
  upper("n_n <= N-bar", false, worst_of(f.n_n, false, false, nullptr), cert.density, false);
  upper("n_p <= N-bar", false, worst_of(f.n_p, false, false, nullptr), cert.density, false);
  upper("|psi| <= M-bar_psi", false, worst_of(f.psi, true, false, nullptr), cert.potential, false);
  upper("|v_n| <= M-bar_v", false, worst_of(f.v_n, true, false, nullptr), cert.quasi_fermi, false);
  upper("|v_p| <= M-bar_v", false, worst_of(f.v_p, true, false, nullptr), cert.quasi_fermi, false);
  if (f.ions) {
    std::vector<char> mask(n, 0);
    for (std::size_t k = 0; k < n; ++k) mask[k] = sys.ion_volume(k) > 0.0;
    positive("n_a positive", worst_of(f.n_a, false, true, &mask));
    upper("n_a < S_a", true, worst_of(f.n_a, false, false, &mask), sys.scenario().ions.statistics.saturation(), true);
    upper("|v_a| <= M-bar_a", false, {std::fabs(f.v_a), 0}, cert.ion_potential, false);
  }
  return rep;
}

/// Checks a computed state against the certificate. Positivity and the ion
/// saturation are hard checks; the certificate bounds are advisory.
inline BoundReport verify_solution_bounds(const DiscreteSystem& sys, const StateVector& u, const BoundCertificate& cert) {
  return verify_field_bounds(sys, field_values(sys, u), cert);
}

inline std::string describe(const BoundCertificate& c) {
  std::ostringstream os;
  os.precision(17);
  os << "N^D = " << c.inputs.boundary_density << '\n'
     << "||G||_p = " << c.inputs.norm_generation << '\n'
     << "||C||_p = " << c.inputs.norm_doping << '\n'
     << "p = " << c.inputs.p << '\n'
     << "r0 = " << c.inputs.r0 << '\n'
     << "K = " << c.inputs.structural_constant << '\n'
     << "N-bar = " << c.density << '\n'
     << "M-bar_psi = " << c.potential << '\n'
     << "M-bar_v = " << c.quasi_fermi << '\n'
     << "M-bar_a = " << c.ion_potential << '\n'
     << "stampacchia zeta = " << c.stampacchia.zeta << '\n'
     << "stampacchia alpha = " << c.stampacchia.alpha << '\n'
     << "stampacchia beta = " << c.stampacchia.beta << '\n'
     << "stampacchia x0 = " << c.stampacchia.x0 << '\n'
     << "stampacchia E0 = " << c.stampacchia.e0 << '\n'
     << "stampacchia threshold = " << c.stampacchia.threshold << '\n';
  return os.str();
}

}  // namespace ddsim
