#pragma once

// Finite-volume discretization of the stationary drift-diffusion system in
// the unknowns (psi, v_n, v_p) per node plus one scalar v_a for the ions.
//
// Layout: unknown 3k + c for node k, c = 0 (psi), 1 (v_n), 2 (v_p); v_a is
// the last unknown when the ion species is active. Contact nodes carry their
// Dirichlet values strongly (row = u - u^D).

#include <Eigen/Sparse>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ddsim/device.hpp"
#include "ddsim/errors.hpp"
#include "ddsim/mesh.hpp"
#include "ddsim/model.hpp"
#include "ddsim/statistics.hpp"

namespace ddsim {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// B(x) = x / (e^x - 1), B(0) = 1.
inline double bernoulli(double x) {
  if (std::fabs(x) < 1e-2) {
    const double x2 = x * x;
    return 1.0 - 0.5 * x + x2 / 12.0 * (1.0 - x2 / 60.0 * (1.0 - x2 / 42.0));
  }
  return x / std::expm1(x);
}

inline double bernoulli_derivative(double x) {
  if (std::fabs(x) < 1e-2) {
    const double x2 = x * x;
    return -0.5 + x / 6.0 - x * x2 / 180.0 + x * x2 * x2 / 5040.0;
  }
  const double b = bernoulli(x);
  return b * (1.0 - b) / x - b;
}

/// Flux of one species from node K to node L (particles per unit time) and
/// its partial derivatives.
struct EdgeFlux {
  double value = 0.0;
  double d_psi_k = 0.0;
  double d_psi_l = 0.0;
  double d_v_k = 0.0;
  double d_v_l = 0.0;
};

namespace detail {

// Density and excess chemical potential e = eta - log F(eta) at one node.
struct SpeciesNode {
  double density = 0.0;
  double slope = 0.0;
  double excess = 0.0;
  double excess_slope = 0.0;
};

inline SpeciesNode species_node(const Statistics& f, double eta) {
  const auto fs = f.evaluate(eta);
  SpeciesNode s{fs.value, fs.slope, 0.0, 0.0};
  if (f.kind() != StatisticsKind::Boltzmann) {
    s.excess = eta - std::log(fs.value);
    s.excess_slope = 1.0 - fs.slope / fs.value;
  }
  return s;
}

// Phi = T [B(dw) n_K - B(-dw) n_L], dw = z (psi_L - psi_K) + e_L - e_K.
inline EdgeFlux edge_flux(int z, double transmissibility, double psi_k, double psi_l,
                          const SpeciesNode& k, const SpeciesNode& l) {
  const double dw = z * (psi_l - psi_k) + (l.excess - k.excess);
  const double bp = bernoulli(dw);
  const double bm = bernoulli(-dw);
  const double g = bernoulli_derivative(dw) * k.density + bernoulli_derivative(-dw) * l.density;
  const double t = transmissibility;
  EdgeFlux f;
  f.value = t * (bp * k.density - bm * l.density);
  f.d_psi_k = t * (-z * (1.0 - k.excess_slope) * g - z * bp * k.slope);
  f.d_psi_l = t * (z * (1.0 - l.excess_slope) * g + z * bm * l.slope);
  f.d_v_k = t * (-k.excess_slope * g + bp * k.slope);
  f.d_v_l = t * (l.excess_slope * g - bm * l.slope);
  return f;
}

}  // namespace detail

/// Excess-chemical-potential two-point flux. Positive values mean particle
/// flow from K to L; the flux vanishes exactly when v_K = v_L.
inline EdgeFlux species_edge_flux(const Statistics& f, int z, double psi_k, double psi_l, double v_k,
                                  double v_l, double transmissibility) {
  const auto k = detail::species_node(f, v_k - z * psi_k);
  const auto l = detail::species_node(f, v_l - z * psi_l);
  return detail::edge_flux(z, transmissibility, psi_k, psi_l, k, l);
}

/// Nodal potentials plus the global ion potential.
class StateVector {
 public:
  StateVector() = default;
  StateVector(std::size_t cells, bool ions)
      : cells_(cells), ions_(ions), values_(Eigen::VectorXd::Zero(3 * cells + (ions ? 1 : 0))) {}

  std::size_t cells() const noexcept { return cells_; }
  bool has_ions() const noexcept { return ions_; }
  Eigen::Index size() const noexcept { return values_.size(); }

  double& psi(std::size_t k) { return values_[3 * k]; }
  double psi(std::size_t k) const { return values_[3 * k]; }
  double& v_n(std::size_t k) { return values_[3 * k + 1]; }
  double v_n(std::size_t k) const { return values_[3 * k + 1]; }
  double& v_p(std::size_t k) { return values_[3 * k + 2]; }
  double v_p(std::size_t k) const { return values_[3 * k + 2]; }
  double& v_a() { return values_[3 * cells_]; }
  double v_a() const { return ions_ ? values_[3 * cells_] : 0.0; }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  bool operator==(const StateVector& o) const {
    return cells_ == o.cells_ && ions_ == o.ions_ && values_.size() == o.values_.size() &&
           values_ == o.values_;
  }

 private:
  std::size_t cells_ = 0;
  bool ions_ = false;
  Eigen::VectorXd values_;
};

struct Densities {
  std::vector<double> n_n;
  std::vector<double> n_p;
  std::vector<double> n_a;  ///< empty without ions, 0 outside the ion region
};

/// Per-face particle fluxes of both carriers, K = face.left to L = face.right.
struct FaceFluxes {
  std::vector<double> electrons;
  std::vector<double> holes;
};

/// A scenario bound to its mesh with all node integrals precomputed.
class DiscreteSystem {
 public:
  explicit DiscreteSystem(DeviceScenario scenario) : scenario_(std::move(scenario)) {
    if (!scenario_.mesh) throw MeshError("scenario has no mesh");
    const FvMesh& mesh = *scenario_.mesh;
    if (scenario_.doping.size() != mesh.region_names.size()) {
      throw MeshError("doping needs one value per region");
    }
    const std::size_t n = mesh.size();
    ions_ = scenario_.ions.active();
    doping_.assign(n, 0.0);
    ion_volume_.assign(n, 0.0);
    generation_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (const auto& piece : mesh.cells[k].pieces) {
        doping_[k] += piece.volume * scenario_.doping[piece.region];
        generation_[k] += piece.volume * scenario_.generation(piece.centroid);
        if (ions_ && scenario_.is_ion_region(piece.region)) ion_volume_[k] += piece.volume;
      }
    }
    ion_measure_ = 0.0;
    for (double v : ion_volume_) ion_measure_ += v;
    if (ions_ && !(ion_measure_ > 0.0)) throw MeshError("ion region has zero measure");

    contact_of_.assign(n, -1);
    for (std::size_t c = 0; c < scenario_.contacts.size(); ++c) {
      const int tag = mesh.boundary_tag(scenario_.contacts[c].boundary);
      for (int k : mesh.boundary_nodes(tag)) {
        if (contact_of_[k] >= 0 && contact_of_[k] != static_cast<int>(c)) {
          throw MeshError("contacts '" + scenario_.contacts[contact_of_[k]].boundary + "' and '" +
                          scenario_.contacts[c].boundary + "' share node " + std::to_string(k));
        }
        contact_of_[k] = static_cast<int>(c);
      }
    }
  }

  const DeviceScenario& scenario() const noexcept { return scenario_; }
  const FvMesh& mesh() const noexcept { return *scenario_.mesh; }
  std::size_t cells() const noexcept { return scenario_.mesh->size(); }
  bool has_ions() const noexcept { return ions_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(3 * cells() + (ions_ ? 1 : 0)); }
  Eigen::Index va_index() const noexcept { return static_cast<Eigen::Index>(3 * cells()); }

  /// Integral of the doping over node k's control volume.
  double doping_charge(std::size_t k) const { return doping_[k]; }
  /// Ion-region share of node k's control volume.
  double ion_volume(std::size_t k) const { return ion_volume_[k]; }
  double ion_measure() const noexcept { return ion_measure_; }
  /// Integral of the generation rate over node k's control volume.
  double generation(std::size_t k) const { return generation_[k]; }
  /// Index into scenario().contacts, or -1 for a node without Dirichlet data.
  int contact_of(std::size_t k) const { return contact_of_[k]; }
  bool is_dirichlet(std::size_t k) const { return contact_of_[k] >= 0; }

  StateVector make_state() const { return StateVector(cells(), ions_); }

  /// Eta arguments are v_n + psi, v_p - psi and v_a - z_a psi.
  Densities densities(const StateVector& u) const {
    check_layout(u);
    Densities d;
    const std::size_t n = cells();
    d.n_n.resize(n);
    d.n_p.resize(n);
    if (ions_) d.n_a.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      d.n_n[k] = density_at(scenario_.electrons, u.v_n(k) + u.psi(k), k, "electron");
      d.n_p[k] = density_at(scenario_.holes, u.v_p(k) - u.psi(k), k, "hole");
      if (ions_ && ion_volume_[k] > 0.0) {
        d.n_a[k] = density_at(scenario_.ions.statistics, u.v_a() - scenario_.ions.charge * u.psi(k), k,
                              "ion");
      }
    }
    return d;
  }

  FaceFluxes face_fluxes(const StateVector& u) const {
    const auto nodes = node_data(u);
    const FvMesh& m = mesh();
    FaceFluxes f;
    f.electrons.resize(m.faces.size());
    f.holes.resize(m.faces.size());
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
      const Face& face = m.faces[i];
      const double t = face.transmissibility();
      const auto k = static_cast<std::size_t>(face.left), l = static_cast<std::size_t>(face.right);
      f.electrons[i] = detail::edge_flux(electron_charge, t, u.psi(k), u.psi(l), nodes.n[k], nodes.n[l]).value;
      f.holes[i] = detail::edge_flux(hole_charge, t, u.psi(k), u.psi(l), nodes.p[k], nodes.p[l]).value;
    }
    return f;
  }

  /// Residual and (optionally) Jacobian. Throws DensityRangeError if a
  /// derived density leaves its admissible range.
  void assemble(const StateVector& u, Eigen::VectorXd* residual, SparseMatrix* jacobian) const {
    const auto nodes = node_data(u);
    const FvMesh& m = mesh();
    const std::size_t n = cells();
    const double lambda2 = scenario_.debye_length * scenario_.debye_length;
    const int za = scenario_.ions.charge;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(size());
    std::vector<Eigen::Triplet<double>> trip;
    const bool jac = jacobian != nullptr;
    if (jac) trip.reserve(36 * n + 2 * n + 64);
    auto add = [&](std::size_t row, std::size_t col, double v) {
      if (row >= 3 * n || !is_dirichlet(row / 3)) trip.emplace_back(row, col, v);
    };

    // Face terms.
    for (const Face& face : m.faces) {
      const double t = face.transmissibility();
      const auto k = static_cast<std::size_t>(face.left), l = static_cast<std::size_t>(face.right);
      const double dpsi = lambda2 * t * (u.psi(k) - u.psi(l));
      r[3 * k] += dpsi;
      r[3 * l] -= dpsi;
      const auto fn = detail::edge_flux(electron_charge, t, u.psi(k), u.psi(l), nodes.n[k], nodes.n[l]);
      const auto fp = detail::edge_flux(hole_charge, t, u.psi(k), u.psi(l), nodes.p[k], nodes.p[l]);
      r[3 * k + 1] += fn.value;
      r[3 * l + 1] -= fn.value;
      r[3 * k + 2] += fp.value;
      r[3 * l + 2] -= fp.value;
      if (!jac) continue;
      const double lt = lambda2 * t;
      for (int s = 0; s < 2; ++s) {
        const double sign = s == 0 ? 1.0 : -1.0;
        const std::size_t row = s == 0 ? k : l;
        add(3 * row, 3 * k, sign * lt);
        add(3 * row, 3 * l, -sign * lt);
        add(3 * row + 1, 3 * k, sign * fn.d_psi_k);
        add(3 * row + 1, 3 * l, sign * fn.d_psi_l);
        add(3 * row + 1, 3 * k + 1, sign * fn.d_v_k);
        add(3 * row + 1, 3 * l + 1, sign * fn.d_v_l);
        add(3 * row + 2, 3 * k, sign * fp.d_psi_k);
        add(3 * row + 2, 3 * l, sign * fp.d_psi_l);
        add(3 * row + 2, 3 * k + 2, sign * fp.d_v_k);
        add(3 * row + 2, 3 * l + 2, sign * fp.d_v_l);
      }
    }

    // Node terms.
    const auto& rec = scenario_.recombination;
    double mass = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double vol = m.cells[k].volume;
      const auto& sn = nodes.n[k];
      const auto& sp = nodes.p[k];
      r[3 * k] -= doping_[k] + vol * (sp.density - sn.density);
      if (jac) {
        add(3 * k, 3 * k, vol * (sp.slope + sn.slope));
        add(3 * k, 3 * k + 1, vol * sn.slope);
        add(3 * k, 3 * k + 2, -vol * sp.slope);
      }
      if (ions_ && ion_volume_[k] > 0.0) {
        const double w = ion_volume_[k];
        r[3 * k] -= za * w * nodes.a[k].value;
        mass += w * nodes.a[k].value;
        if (jac) {
          add(3 * k, 3 * k, za * za * w * nodes.a[k].slope);
          add(3 * k, va_index(), -za * w * nodes.a[k].slope);
          trip.emplace_back(va_index(), 3 * k, -za * w * nodes.a[k].slope / ion_measure_);
        }
      }

      // R = r(n_n, n_p) n_n n_p (1 - e^{-s}), s = v_n + v_p.
      const double s = u.v_n(k) + u.v_p(k);
      const double factor = -std::expm1(-s);
      const auto rate = rec.rate(sn.density, sp.density);
      const double prod = rate.value * sn.density * sp.density;
      const double net = vol * prod * factor - generation_[k];
      r[3 * k + 1] += net;
      r[3 * k + 2] += net;
      if (jac) {
        const double p_n = (rate.d_dn * sn.density + rate.value) * sp.density;
        const double p_p = (rate.d_dp * sp.density + rate.value) * sn.density;
        const double es = prod * std::exp(-s);
        const double d_psi = vol * factor * (p_n * sn.slope - p_p * sp.slope);
        const double d_vn = vol * (factor * p_n * sn.slope + es);
        const double d_vp = vol * (factor * p_p * sp.slope + es);
        for (std::size_t c = 1; c <= 2; ++c) {
          add(3 * k + c, 3 * k, d_psi);
          add(3 * k + c, 3 * k + 1, d_vn);
          add(3 * k + c, 3 * k + 2, d_vp);
        }
      }
    }

    // Contact rows.
    for (std::size_t k = 0; k < n; ++k) {
      if (!is_dirichlet(k)) continue;
      const Contact& c = scenario_.contacts[contact_of_[k]];
      r[3 * k] = u.psi(k) - c.psi;
      r[3 * k + 1] = u.v_n(k) - c.v_n;
      r[3 * k + 2] = u.v_p(k) - c.v_p;
      if (jac) {
        for (std::size_t c3 = 0; c3 < 3; ++c3) trip.emplace_back(3 * k + c3, 3 * k + c3, 1.0);
      }
    }

    if (ions_) {
      r[va_index()] = (mass - scenario_.ions.mass) / ion_measure_;
      if (jac) {
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) d += ion_volume_[k] * nodes.a[k].slope;
        trip.emplace_back(va_index(), va_index(), d / ion_measure_);
      }
    }

    if (residual) *residual = std::move(r);
    if (jac) {
      jacobian->resize(size(), size());
      jacobian->setFromTriplets(trip.begin(), trip.end());
      jacobian->makeCompressed();
    }
  }

  Eigen::VectorXd residual(const StateVector& u) const {
    Eigen::VectorXd r;
    assemble(u, &r, nullptr);
    return r;
  }

  SparseMatrix jacobian(const StateVector& u) const {
    SparseMatrix j;
    assemble(u, nullptr, &j);
    return j;
  }

  /// Sets the Dirichlet values at contact nodes and leaves other entries.
  void apply_dirichlet(StateVector& u) const {
    for (std::size_t k = 0; k < cells(); ++k) {
      if (!is_dirichlet(k)) continue;
      const Contact& c = scenario_.contacts[contact_of_[k]];
      u.psi(k) = c.psi;
      u.v_n(k) = c.v_n;
      u.v_p(k) = c.v_p;
    }
  }

 private:
  struct NodeData {
    std::vector<detail::SpeciesNode> n;
    std::vector<detail::SpeciesNode> p;
    std::vector<ValueAndSlope> a;
  };

  void check_layout(const StateVector& u) const {
    if (u.cells() != cells() || u.has_ions() != ions_) {
      throw std::invalid_argument("state vector layout does not match the discrete system");
    }
  }

  static double density_at(const Statistics& f, double eta, std::size_t k, const char* species) {
    const auto v = evaluate_checked(f, eta, k, species);
    return v.value;
  }

  static ValueAndSlope evaluate_checked(const Statistics& f, double eta, std::size_t k,
                                        const char* species) {
    ValueAndSlope v{};
    try {
      v = f.evaluate(eta);
    } catch (const std::exception& e) {
      throw DensityRangeError(k, std::string(species) + " density: " + e.what());
    }
    if (!(v.value > 0.0) || !std::isfinite(v.value) || !(v.slope > 0.0)) {
      throw DensityRangeError(k, std::string(species) + " density out of range at eta = " +
                                     std::to_string(eta));
    }
    if (f.bounded() && !(v.value < f.saturation())) {
      throw DensityRangeError(k, std::string(species) + " density reached saturation");
    }
    return v;
  }

  static detail::SpeciesNode species_checked(const Statistics& f, double eta, std::size_t k,
                                             const char* species) {
    const auto v = evaluate_checked(f, eta, k, species);
    detail::SpeciesNode s{v.value, v.slope, 0.0, 0.0};
    if (f.kind() != StatisticsKind::Boltzmann) {
      s.excess = eta - std::log(v.value);
      s.excess_slope = 1.0 - v.slope / v.value;
    }
    return s;
  }

  NodeData node_data(const StateVector& u) const {
    check_layout(u);
    const std::size_t n = cells();
    NodeData d;
    d.n.resize(n);
    d.p.resize(n);
    if (ions_) d.a.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(u.psi(k)) || !std::isfinite(u.v_n(k)) || !std::isfinite(u.v_p(k))) {
        throw DensityRangeError(k, "non-finite potential");
      }
      d.n[k] = species_checked(scenario_.electrons, u.v_n(k) + u.psi(k), k, "electron");
      d.p[k] = species_checked(scenario_.holes, u.v_p(k) - u.psi(k), k, "hole");
      if (ions_ && ion_volume_[k] > 0.0) {
        d.a[k] = evaluate_checked(scenario_.ions.statistics,
                                  u.v_a() - scenario_.ions.charge * u.psi(k), k, "ion");
      }
    }
    return d;
  }

  DeviceScenario scenario_;
  bool ions_ = false;
  std::vector<double> doping_;
  std::vector<double> ion_volume_;
  std::vector<double> generation_;
  std::vector<int> contact_of_;
  double ion_measure_ = 0.0;
};

inline Eigen::VectorXd assemble_residual(const DiscreteSystem& sys, const StateVector& u) {
  return sys.residual(u);
}

inline SparseMatrix assemble_jacobian(const DiscreteSystem& sys, const StateVector& u) {
  return sys.jacobian(u);
}

}  // namespace ddsim
