#pragma once

// Canned devices (three-layer perovskite cell, 2-D LBIC p-n structure),
// contact currents, and the solve / scan / sweep drivers built on them.

#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ddsim/bounds.hpp"
#include "ddsim/device.hpp"
#include "ddsim/fvm.hpp"
#include "ddsim/mesh.hpp"
#include "ddsim/newton.hpp"
#include "ddsim/poisson.hpp"

namespace ddsim {

/// Knobs of both presets. `preset` is "psc" or "lbic"; fields that a preset
/// does not use are ignored by it.
struct ScenarioParameters {
  std::string preset = "psc";
  int species = 2;  ///< psc: 2 (bipolar) or 3 (with anion vacancies)
  double voltage = 2.0;
  double generation = 1.0;  ///< G0
  double debye_length = 1.0;
  double doping = 10.0;      ///< |C| of the doped layers / regions
  double ion_doping = 7.5;   ///< C_a, psc three-species
  double saturation = 10.0;  ///< S_a
  double ion_mass = -1.0;    ///< M_a; negative means |Omega_PVK| C_a
  std::string electron_statistics = "fermi-dirac-half";
  std::string hole_statistics = "fermi-dirac-half";
  double radiative = 1.0;
  bool srh = true;
  double tau_n = 1.0;
  double tau_p = 1.0;
  double reference_n = 0.0;
  double reference_p = 0.0;
  double spacing = 1.26e-2;  ///< psc mesh
  double beam_x = 4.0;       ///< lbic beam center
  double beam_y = 2.0;
  double beam_width = 0.5;

  bool operator==(const ScenarioParameters&) const = default;
};

inline ScenarioParameters psc_parameters(int species = 2) {
  ScenarioParameters p;
  p.preset = "psc";
  p.species = species;
  p.voltage = species == 3 ? 1.0 : 2.0;
  return p;
}

inline ScenarioParameters lbic_parameters() {
  ScenarioParameters p;
  p.preset = "lbic";
  p.species = 2;
  p.voltage = 0.0;
  p.radiative = 0.0;
  return p;
}

inline std::shared_ptr<const FvMesh> psc_mesh(double spacing = 1.26e-2) {
  return std::make_shared<const FvMesh>(
      build_interval_mesh({{"ETL", 0.0, 1.0}, {"PVK", 1.0, 5.0}, {"HTL", 5.0, 7.0}}, spacing));
}

struct NodeLines {
  std::vector<double> x;
  std::vector<double> y;
};

/// The 53 x 23 node layout on (0,8) x (0,4): uniform in x (the p-region
/// edges x = 2, 6 fall on lines), uniform 0.2 spacing across the p-region
/// in y and six geometric intervals (ratio 1.0625) in each outer n-strip,
/// finest at the outer boundary.
inline NodeLines lbic_node_lines() {
  NodeLines lines;
  for (int i = 0; i <= 52; ++i) lines.x.push_back(8.0 * i / 52.0);
  const double ratio = 1.0625;
  std::vector<double> strip{0.0};
  double width = (ratio - 1.0) / (std::pow(ratio, 6) - 1.0);
  for (int i = 0; i < 6; ++i) {
    strip.push_back(i == 5 ? 1.0 : strip.back() + width);
    width *= ratio;
  }
  lines.y = strip;
  for (int j = 1; j <= 10; ++j) lines.y.push_back(j == 10 ? 3.0 : 1.0 + 0.2 * j);
  for (int i = 5; i >= 0; --i) lines.y.push_back(4.0 - strip[i]);
  return lines;
}

inline RegionSpec lbic_regions() {
  return {{"n", Box{{0.0, 0.0}, {8.0, 4.0}}}, {"p", Box{{2.0, 1.0}, {6.0, 3.0}}}};
}

inline std::shared_ptr<const FvMesh> lbic_mesh() {
  static const std::shared_ptr<const FvMesh> mesh = [] {
    const auto lines = lbic_node_lines();
    return std::make_shared<const FvMesh>(build_tensor_mesh(lines.x, lines.y, lbic_regions()));
  }();
  return mesh;
}

namespace detail {

inline RecombinationModel recombination_from(const ScenarioParameters& p) {
  RecombinationModel r;
  r.radiative = p.radiative;
  r.srh = p.srh;
  r.tau_n = p.tau_n;
  r.tau_p = p.tau_p;
  r.reference_n = p.reference_n;
  r.reference_p = p.reference_p;
  return r;
}

// Ohmic contact: local neutrality fixes psi^D; v_n^D = -V, v_p^D = V.
inline Contact ohmic_contact(const DeviceScenario& s, std::string boundary, double doping, double voltage) {
  Contact c;
  c.boundary = std::move(boundary);
  c.psi = neutral_potential(s.electrons, s.holes, doping) + voltage;
  c.v_n = -voltage;
  c.v_p = voltage;
  return c;
}

}  // namespace detail

/// Builds the scenario; validation is left to validate_assumptions.
inline DeviceScenario build_scenario(const ScenarioParameters& p) {
  DeviceScenario s;
  s.debye_length = p.debye_length;
  s.electrons = Statistics::from_name(p.electron_statistics);
  s.holes = Statistics::from_name(p.hole_statistics);
  s.recombination = detail::recombination_from(p);
  if (p.preset == "psc") {
    if (p.species != 2 && p.species != 3) throw DomainError("psc species must be 2 or 3");
    s.name = p.species == 3 ? "psc-three-species" : "psc-two-species";
    s.mesh = psc_mesh(p.spacing);
    const int pvk = s.mesh->region_tag("PVK");
    s.doping = {p.doping, 0.0, -p.doping};
    if (p.species == 3) {
      s.doping[pvk] = -p.ion_doping;
      s.ions.charge = 1;
      s.ions.regions = {pvk};
      s.ions.statistics = Statistics::blakemore(p.saturation);
      s.ions.mass = p.ion_mass >= 0.0 ? p.ion_mass : 4.0 * p.ion_doping;  // |Omega_PVK| C_a
    }
    s.generation = GenerationProfile::exponential_decay(p.generation, {1.0, 0.0}, {1.0, 0.0},
                                                        Box::interval(1.0, 5.0));
    s.contacts = {detail::ohmic_contact(s, "left", p.doping, 0.0),
                  detail::ohmic_contact(s, "right", -p.doping, p.voltage)};
  } else if (p.preset == "lbic") {
    s.name = "lbic";
    s.mesh = lbic_mesh();
    s.doping = {p.doping, -p.doping};
    s.generation = GenerationProfile::gaussian_beam(p.generation, {p.beam_x, p.beam_y}, p.beam_width);
    s.contacts = {detail::ohmic_contact(s, "left", p.doping, 0.0),
                  detail::ohmic_contact(s, "right", p.doping, p.voltage)};
  } else {
    throw DomainError("unknown preset '" + p.preset + "'");
  }
  return s;
}

inline DeviceScenario psc_scenario(int species, double voltage, double generation) {
  auto p = psc_parameters(species);
  p.voltage = voltage;
  p.generation = generation;
  return build_scenario(p);
}

inline DeviceScenario lbic_scenario(Point center = {4.0, 2.0}, double generation = 1.0, double debye_length = 1.0,
                                    double doping = 10.0) {
  auto p = lbic_parameters();
  p.beam_x = center.x;
  p.beam_y = center.y;
  p.generation = generation;
  p.debye_length = debye_length;
  p.doping = doping;
  return build_scenario(p);
}

// ---------------------------------------------------------------- currents

enum class CurrentMethod { BoundaryFluxSum, VolumeTestFunction };

inline std::string to_string(CurrentMethod m) {
  return m == CurrentMethod::BoundaryFluxSum ? "boundary-flux-sum" : "volume-test-function";
}

struct ContactCurrent {
  std::string contact;
  double value = 0.0;  ///< outward current I_B
  CurrentMethod method = CurrentMethod::BoundaryFluxSum;
};

class ContactError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline int contact_index(const DiscreteSystem& sys, const std::string& contact) {
  const auto& contacts = sys.scenario().contacts;
  for (std::size_t c = 0; c < contacts.size(); ++c) {
    if (contacts[c].boundary == contact) return static_cast<int>(c);
  }
  throw ContactError("'" + contact + "' is not a Dirichlet contact");
}

// The closure of the contact must not touch another Dirichlet part.
inline void check_ohmic(const DiscreteSystem& sys, const std::string& contact) {
  const int c = contact_index(sys, contact);
  const FvMesh& m = sys.mesh();
  const auto mine = m.boundary_nodes(m.boundary_tag(contact));
  for (std::size_t o = 0; o < sys.scenario().contacts.size(); ++o) {
    if (static_cast<int>(o) == c) continue;
    const auto other = m.boundary_nodes(m.boundary_tag(sys.scenario().contacts[o].boundary));
    std::vector<int> shared;
    std::set_intersection(mine.begin(), mine.end(), other.begin(), other.end(), std::back_inserter(shared));
    if (!shared.empty()) throw ContactError("contact '" + contact + "' touches another Dirichlet part");
  }
}

}  // namespace detail

/// Discrete harmonic function: 1 on `contact`, 0 on the other contacts,
/// discrete Laplace equation elsewhere (homogeneous Neumann on the rest).
inline std::vector<double> harmonic_lift(const DiscreteSystem& sys, const std::string& contact) {
  const int c = detail::contact_index(sys, contact);
  const FvMesh& m = sys.mesh();
  const std::size_t n = sys.cells();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const Face& f : m.faces) {
    const double t = f.transmissibility();
    for (int side = 0; side < 2; ++side) {
      const int k = side == 0 ? f.left : f.right;
      const int l = side == 0 ? f.right : f.left;
      if (sys.is_dirichlet(k)) continue;
      trip.emplace_back(k, k, t);
      trip.emplace_back(k, l, -t);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!sys.is_dirichlet(k)) continue;
    trip.emplace_back(k, k, 1.0);
    rhs[static_cast<Eigen::Index>(k)] = sys.contact_of(k) == c ? 1.0 : 0.0;
  }
  SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu(a);
  if (lu.info() != Eigen::Success) throw std::runtime_error("harmonic lift: singular Laplace matrix");
  const Eigen::VectorXd u = lu.solve(rhs);
  return {u.data(), u.data() + u.size()};
}

/// Outward current through `contact`. BoundaryFluxSum adds the electron minus
/// hole particle flux leaving the contact nodes; VolumeTestFunction evaluates
/// -sum_faces J_KL (u_K - u_L) with J = hole - electron flux and u the
/// harmonic lift of the contact.
inline ContactCurrent contact_current(const DiscreteSystem& sys, const StateVector& u, const std::string& contact,
                                      CurrentMethod method) {
  detail::check_ohmic(sys, contact);
  const int c = detail::contact_index(sys, contact);
  const FvMesh& m = sys.mesh();
  const auto flux = sys.face_fluxes(u);
  double value = 0.0;
  if (method == CurrentMethod::BoundaryFluxSum) {
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
      const Face& f = m.faces[i];
      const double out = flux.electrons[i] - flux.holes[i];
      if (sys.contact_of(f.left) == c) value += out;
      if (sys.contact_of(f.right) == c) value -= out;
    }
  } else {
    const auto lift = harmonic_lift(sys, contact);
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
      const Face& f = m.faces[i];
      const double j = flux.holes[i] - flux.electrons[i];
      value -= j * (lift[f.left] - lift[f.right]);
    }
  }
  return {contact, value, method};
}

/// Both current evaluations plus the Cauchy-Schwarz bound
/// |I| <= (sum J^2 / T)^{1/2} (sum T (u_K - u_L)^2)^{1/2}.
struct CurrentReport {
  std::string contact;
  double boundary_flux = 0.0;
  double volume_test = 0.0;
  double bound = 0.0;  ///< discrete K
  double flux_scale = 0.0;  ///< max face |J|
};

inline CurrentReport current_report(const DiscreteSystem& sys, const StateVector& u, const std::string& contact) {
  CurrentReport rep;
  rep.contact = contact;
  rep.boundary_flux = contact_current(sys, u, contact, CurrentMethod::BoundaryFluxSum).value;
  rep.volume_test = contact_current(sys, u, contact, CurrentMethod::VolumeTestFunction).value;
  const auto flux = sys.face_fluxes(u);
  const auto lift = harmonic_lift(sys, contact);
  double jj = 0.0, uu = 0.0;
  const FvMesh& m = sys.mesh();
  for (std::size_t i = 0; i < m.faces.size(); ++i) {
    const Face& f = m.faces[i];
    const double t = f.transmissibility();
    const double j = flux.holes[i] - flux.electrons[i];
    const double du = lift[f.left] - lift[f.right];
    jj += j * j / t;
    uu += t * du * du;
    rep.flux_scale = std::max(rep.flux_scale, std::fabs(j));
  }
  rep.bound = std::sqrt(jj) * std::sqrt(uu);
  return rep;
}

// ----------------------------------------------------------------- drivers

struct LadderSettings {
  int voltage_steps = 9;
  double generation_start = 1e-2;

  bool operator==(const LadderSettings&) const = default;
};

inline std::vector<double> voltage_ladder(double voltage, const LadderSettings& l = {}) {
  return linear_ladder(0.0, voltage, std::max(1, l.voltage_steps) + 1);
}

inline std::vector<double> generation_ladder(double generation, const LadderSettings& l = {}) {
  return decade_ladder(generation, l.generation_start);
}

struct SolveRun {
  bool converged = false;
  std::string message;
  ScenarioParameters parameters;
  std::vector<double> voltage_values;
  std::vector<double> generation_values;
  std::vector<SolveReport> voltage_reports;
  std::vector<SolveReport> generation_reports;
  int equilibrium_iterations = 0;
  StateVector state;
  std::shared_ptr<const DiscreteSystem> system;  ///< final rung
};

/// Equilibrium, then the voltage ladder in the dark, then the generation
/// ladder at the target voltage.
inline SolveRun solve_scenario(const ScenarioParameters& params, const NewtonConfig& cfg = {},
                               const LadderSettings& ladders = {}) {
  SolveRun run;
  run.parameters = params;
  auto at = [&params](double v, double g) {
    auto p = params;
    p.voltage = v;
    p.generation = g;
    return DiscreteSystem(build_scenario(p));
  };
  const DiscreteSystem dark = at(0.0, 0.0);
  try {
    const auto eq = solve_equilibrium_poisson(dark);
    run.equilibrium_iterations = eq.iterations;
    run.state = dark.make_state();
    for (std::size_t k = 0; k < dark.cells(); ++k) run.state.psi(k) = eq.psi[k];
    if (dark.has_ions()) run.state.v_a() = eq.v_a;
  } catch (const std::exception& e) {
    run.message = std::string("equilibrium: ") + e.what();
    return run;
  }
  run.voltage_values = voltage_ladder(params.voltage, ladders);
  run.voltage_reports = continuation_solve([&](double v) { return at(v, 0.0); }, run.voltage_values, run.state, cfg);
  if (run.voltage_reports.empty() || !run.voltage_reports.back().converged) {
    run.message = "voltage ladder failed: " +
                  (run.voltage_reports.empty() ? std::string("no rungs") : run.voltage_reports.back().message);
    return run;
  }
  run.state = run.voltage_reports.back().state;
  run.generation_values = generation_ladder(params.generation, ladders);
  run.generation_reports =
      continuation_solve([&](double g) { return at(params.voltage, g); }, run.generation_values, run.state, cfg);
  if (!run.generation_reports.empty()) {
    if (!run.generation_reports.back().converged) {
      run.message = "generation ladder failed: " + run.generation_reports.back().message;
      return run;
    }
    run.state = run.generation_reports.back().state;
  }
  run.system = std::make_shared<const DiscreteSystem>(at(params.voltage, params.generation));
  run.converged = true;
  return run;
}

// -------------------------------------------------------------------- LBIC

struct LbicPoint {
  double x = 0.0;
  double y = 0.0;
  double current = 0.0;  ///< outward current at the right contact
  bool converged = false;
  int iterations = 0;
  std::string message;
};

struct LbicSignal {
  std::vector<LbicPoint> points;

  std::vector<std::size_t> failures() const {
    std::vector<std::size_t> f;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].converged) f.push_back(i);
    }
    return f;
  }
};

/// Beam positions along the node line closest to y = y0.
inline std::vector<Point> lbic_line_positions(const FvMesh& mesh, double y0) {
  std::vector<Point> pts;
  for (double x : mesh.x_lines) pts.push_back({x, y0});
  return pts;
}

inline std::vector<Point> lbic_grid_positions(const FvMesh& mesh) {
  std::vector<Point> pts;
  for (double y : mesh.y_lines) {
    for (double x : mesh.x_lines) pts.push_back({x, y});
  }
  return pts;
}

/// Solves once per beam position starting from the shared dark state at the
/// template's voltage. Results keep the order of `positions` for any thread
/// count.
inline LbicSignal lbic_scan(const std::vector<Point>& positions, const ScenarioParameters& tmpl,
                            const NewtonConfig& cfg = {}, const LadderSettings& ladders = {}, int threads = 1) {
  LbicSignal signal;
  signal.points.resize(positions.size());
  auto dark_params = tmpl;
  dark_params.generation = 0.0;
  const SolveRun dark = solve_scenario(dark_params, cfg, ladders);
  if (!dark.converged) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
      signal.points[i] = {positions[i].x, positions[i].y, 0.0, false, 0, "dark state: " + dark.message};
    }
    return signal;
  }
  const std::string contact = build_scenario(tmpl).contacts.back().boundary;

  auto job = [&](std::size_t i) {
    LbicPoint& pt = signal.points[i];
    pt.x = positions[i].x;
    pt.y = positions[i].y;
    auto p = tmpl;
    p.beam_x = pt.x;
    p.beam_y = pt.y;
    try {
      const DiscreteSystem sys(build_scenario(p));
      auto rep = newton_solve(sys, dark.state, cfg);
      pt.iterations = rep.iterations();
      if (!rep.converged) {
        const auto reports = continuation_solve(
            [&](double g) {
              auto q = p;
              q.generation = g;
              return DiscreteSystem(build_scenario(q));
            },
            generation_ladder(p.generation, ladders), dark.state, cfg);
        for (const auto& r : reports) pt.iterations += r.iterations();
        if (reports.empty() || !reports.back().converged) {
          pt.message = reports.empty() ? "empty ladder" : reports.back().message;
          return;
        }
        rep = reports.back();
      }
      pt.current = contact_current(sys, rep.state, contact, CurrentMethod::BoundaryFluxSum).value;
      pt.converged = true;
    } catch (const std::exception& e) {
      pt.message = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, positions.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < positions.size(); ++i) job(i);
    return signal;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < positions.size(); i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();
  return signal;
}

// ------------------------------------------------------------------- sweep

struct SweepRow {
  double value = 0.0;
  bool converged = false;
  std::string message;
  LinfNorms norms;
  double current_left = 0.0;
  double current_right = 0.0;
  bool bounds_hard_ok = false;
  bool bounds_certificate_ok = false;
  int iterations = 0;
};

/// Sets one of "G0", "V", "lambda", "C" on a parameter set.
inline void set_sweep_parameter(ScenarioParameters& p, const std::string& name, double value) {
  if (name == "G0") {
    p.generation = value;
  } else if (name == "V") {
    p.voltage = value;
  } else if (name == "lambda") {
    p.debye_length = value;
  } else if (name == "C") {
    p.doping = value;
  } else {
    throw DomainError("unknown sweep parameter '" + name + "' (use G0, V, lambda or C)");
  }
}

/// One full solve per value; each row carries the bound verdict.
inline std::vector<SweepRow> parameter_sweep(const ScenarioParameters& family, const std::string& parameter,
                                             const std::vector<double>& values, const NewtonConfig& cfg = {},
                                             const LadderSettings& ladders = {}, const BoundsConfig& bounds = {}) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    auto p = family;
    set_sweep_parameter(p, parameter, v);
    try {
      const auto run = solve_scenario(p, cfg, ladders);
      for (const auto& r : run.voltage_reports) row.iterations += r.iterations();
      for (const auto& r : run.generation_reports) row.iterations += r.iterations();
      if (!run.converged) {
        row.message = run.message;
      } else {
        const DiscreteSystem& sys = *run.system;
        row.converged = true;
        row.norms = linf_norms(sys, run.state);
        const auto& contacts = sys.scenario().contacts;
        row.current_left = contact_current(sys, run.state, contacts.front().boundary, CurrentMethod::BoundaryFluxSum).value;
        row.current_right = contact_current(sys, run.state, contacts.back().boundary, CurrentMethod::BoundaryFluxSum).value;
        const auto verdict = verify_solution_bounds(sys, run.state, bound_certificate(sys, bounds));
        row.bounds_hard_ok = verdict.hard_ok();
        row.bounds_certificate_ok = verdict.certificate_ok();
      }
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ddsim
