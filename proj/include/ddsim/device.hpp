#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ddsim/errors.hpp"
#include "ddsim/mesh.hpp"
#include "ddsim/model.hpp"
#include "ddsim/statistics.hpp"

namespace ddsim {

/// Constant Dirichlet data on one boundary part (an ohmic contact).
struct Contact {
  std::string boundary;
  double psi = 0.0;
  double v_n = 0.0;
  double v_p = 0.0;

  bool operator==(const Contact&) const = default;
};

/// Everything needed to pose the stationary problem on a mesh.
struct DeviceScenario {
  std::string name;
  std::shared_ptr<const FvMesh> mesh;
  std::vector<double> doping;  ///< per region tag
  double debye_length = 1.0;
  Statistics electrons = Statistics::fermi_dirac_half();
  Statistics holes = Statistics::fermi_dirac_half();
  IonSpecies ions;
  RecombinationModel recombination;
  GenerationProfile generation;
  std::vector<Contact> contacts;

  double ion_region_measure() const {
    double total = 0.0;
    for (int tag : ions.regions) total += mesh->region_measure(tag);
    return total;
  }

  bool is_ion_region(int tag) const {
    for (int r : ions.regions) {
      if (r == tag) return true;
    }
    return false;
  }
};

/// Charge-neutral potential: F_p(v_p - psi) - F_n(v_n + psi) + c = 0.
inline double neutral_potential(const Statistics& electrons, const Statistics& holes, double doping,
                                double v_n = 0.0, double v_p = 0.0) {
  auto charge = [&](double psi) { return holes(v_p - psi) - electrons(v_n + psi) + doping; };
  double lo = -1.0;
  double hi = 1.0;
  while (charge(lo) < 0.0) lo *= 2.0;
  while (charge(hi) > 0.0) hi *= 2.0;
  double psi = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto fn = electrons.evaluate(v_n + psi);
    const auto fp = holes.evaluate(v_p - psi);
    const double q = fp.value - fn.value + doping;
    if (q > 0.0) lo = psi; else hi = psi;
    double next = psi + q / (fp.slope + fn.slope);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - psi) <= 1e-15 * (1.0 + std::fabs(psi))) return next;
    psi = next;
  }
  return psi;
}

struct ValidationCheck {
  std::string name;
  bool passed = true;
  bool advisory = false;  ///< a failing advisory check is a warning only
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    for (const auto& c : checks) {
      if (!c.passed && !c.advisory) return false;
    }
    return true;
  }

  const ValidationCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
      if (c.passed) continue;
      os << (c.advisory ? "warning: " : "error: ") << c.name << ": " << c.message << '\n';
    }
    return os.str();
  }
};

/// Checks the standing hypotheses on the data. Never throws on bad data.
inline ValidationReport validate_assumptions(const DeviceScenario& s) {
  ValidationReport report;
  auto add = [&report](std::string name, bool ok, std::string message, bool advisory = false) {
    report.checks.push_back({std::move(name), ok, advisory, ok ? std::string() : std::move(message)});
  };

  if (!s.mesh) {
    add("mesh", false, "scenario has no mesh");
    return report;
  }
  const FvMesh& mesh = *s.mesh;
  add("debye length", s.debye_length > 0.0 && std::isfinite(s.debye_length),
      "Debye length must be positive and finite");

  bool doping_ok = s.doping.size() == mesh.region_names.size();
  for (double c : s.doping) doping_ok = doping_ok && std::isfinite(c);
  add("doping", doping_ok, "need one finite doping value per region");

  // |Gamma^D| > 0 and finite Dirichlet data.
  double dirichlet_measure = 0.0;
  bool contacts_ok = true;
  std::string contact_msg;
  for (const auto& c : s.contacts) {
    int tag = -1;
    try {
      tag = mesh.boundary_tag(c.boundary);
    } catch (const MeshError& e) {
      contacts_ok = false;
      contact_msg = e.what();
      continue;
    }
    dirichlet_measure += mesh.boundary_measure(tag);
    if (!std::isfinite(c.psi) || !std::isfinite(c.v_n) || !std::isfinite(c.v_p)) {
      contacts_ok = false;
      contact_msg = "non-finite Dirichlet data on '" + c.boundary + "'";
    }
  }
  add("dirichlet data", contacts_ok, contact_msg);
  add("dirichlet measure", dirichlet_measure > 0.0, "the Dirichlet boundary has zero measure");

  bool g_ok = true;
  for (const auto& cell : mesh.cells) {
    const double g = s.generation(cell.center);
    if (!(g >= 0.0) || !std::isfinite(g)) g_ok = false;
  }
  add("generation nonnegative", g_ok, "G < 0 (or not finite) at some cell center");

  add("recombination", s.recombination.radiative >= 0.0 && s.recombination.tau_n > 0.0 &&
                           s.recombination.tau_p > 0.0 && s.recombination.reference_n >= 0.0 &&
                           s.recombination.reference_p >= 0.0,
      "recombination parameters must be nonnegative (lifetimes positive)");

  if (s.ions.active()) {
    bool regions_ok = !s.ions.regions.empty();
    for (int r : s.ions.regions) {
      regions_ok = regions_ok && r >= 0 && r < static_cast<int>(mesh.region_names.size());
    }
    add("ion regions", regions_ok, "ion species needs valid region tags");
    if (regions_ok) {
      const double measure = s.ion_region_measure();
      const double capacity = measure * s.ions.statistics.saturation();
      std::ostringstream msg;
      msg << "need 0 < M_a < |Omega_ion| S_a, got M_a = " << s.ions.mass << ", |Omega_ion| S_a = "
          << capacity;
      add("mass compatibility", s.ions.mass > 0.0 && s.ions.mass < capacity, msg.str());
    }
    add("ion statistics bounded", s.ions.statistics.bounded(),
        "ion statistics must have a finite saturation density");
    // F_a <= exp(eta) fails for Blakemore with S_a > 2 near eta = 0; kept as a warning.
    bool sandwich = true;
    for (int i = -400; i <= 400 && sandwich; ++i) {
      const double eta = i * 0.1;
      const auto fs = s.ions.statistics.evaluate(eta);
      sandwich = fs.slope <= fs.value * (1.0 + 1e-12) && fs.value <= std::exp(eta) * (1.0 + 1e-12);
    }
    add("ion statistics sandwich", sandwich, "F_a' <= F_a <= exp does not hold on [-40, 40]", true);
  }
  return report;
}

}  // namespace ddsim
