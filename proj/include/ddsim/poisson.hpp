#pragma once

// Mass-constrained nonlinear Poisson problem
//   lambda^2 sum T (psi_K - psi_L) = sigma [f_K + z_a |K cap ion| F_a(v_a - z_a psi_K)],
//   sum |K cap ion| F_a(v_a - z_a psi_K) = M_a,    psi = sigma psi^D on contacts,
// either with frozen carrier densities in f or at thermal equilibrium, where
// f depends on psi through n_n = F_n(psi), n_p = F_p(-psi).

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddsim/fvm.hpp"

namespace ddsim {

struct PoissonOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;  ///< relative to the residual scale
};

struct PoissonResult {
  std::vector<double> psi;
  double v_a = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;  ///< max-norm of the discrete stationarity residual
  bool converged = false;
};

class PoissonConvergenceError : public std::runtime_error {
 public:
  PoissonConvergenceError(const std::string& what, double gradient_norm)
      : std::runtime_error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

namespace detail {

class PoissonProblem {
 public:
  PoissonProblem(const DiscreteSystem& sys, const std::vector<double>* n_n, const std::vector<double>* n_p,
                 double sigma)
      : sys_(sys), n_n_(n_n), n_p_(n_p), sigma_(sigma) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(sys_.cells() + (sys_.has_ions() ? 1 : 0)); }

  // Returns false if a density leaves its range.
  bool evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, SparseMatrix* jac) const {
    try {
      return evaluate_impl(x, r, jac);
    } catch (const OverflowError&) {
      return false;
    } catch (const DomainError&) {
      return false;
    }
  }

 private:
  bool evaluate_impl(const Eigen::VectorXd& x, Eigen::VectorXd& r, SparseMatrix* jac) const {
    const FvMesh& m = sys_.mesh();
    const DeviceScenario& s = sys_.scenario();
    const std::size_t n = sys_.cells();
    const double lambda2 = s.debye_length * s.debye_length;
    const int za = s.ions.charge;
    const bool ions = sys_.has_ions();
    const Eigen::Index ia = static_cast<Eigen::Index>(n);
    r = Eigen::VectorXd::Zero(size());
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](std::size_t row, Eigen::Index col, double v) {
      if (jac && (row >= n || !sys_.is_dirichlet(row))) trip.emplace_back(row, col, v);
    };
    for (const Face& f : m.faces) {
      const double lt = lambda2 * f.transmissibility();
      const auto k = static_cast<std::size_t>(f.left), l = static_cast<std::size_t>(f.right);
      const double d = lt * (x[k] - x[l]);
      r[k] += d;
      r[l] -= d;
      add(k, k, lt);
      add(k, l, -lt);
      add(l, l, lt);
      add(l, k, -lt);
    }
    double mass = 0.0, dmass = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double vol = m.cells[k].volume;
      double rhs = sys_.doping_charge(k);
      double drhs = 0.0;
      if (n_n_) {
        rhs += vol * ((*n_p_)[k] - (*n_n_)[k]);
      } else {
        const auto fn = s.electrons.evaluate(x[k]);
        const auto fp = s.holes.evaluate(-x[k]);
        if (!valid(fn) || !valid(fp)) return false;
        rhs += vol * (fp.value - fn.value);
        drhs -= vol * (fp.slope + fn.slope);
      }
      if (ions && sys_.ion_volume(k) > 0.0) {
        const double w = sys_.ion_volume(k);
        const auto fa = s.ions.statistics.evaluate(x[ia] - za * x[k]);
        if (!valid(fa) || (s.ions.statistics.bounded() && !(fa.value < s.ions.statistics.saturation()))) {
          return false;
        }
        rhs += za * w * fa.value;
        drhs -= za * za * w * fa.slope;
        add(k, ia, -sigma_ * za * w * fa.slope);
        mass += w * fa.value;
        dmass += w * fa.slope;
        if (jac) trip.emplace_back(ia, k, -za * w * fa.slope / sys_.ion_measure());
      }
      r[k] -= sigma_ * rhs;
      add(k, k, -sigma_ * drhs);
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!sys_.is_dirichlet(k)) continue;
      r[k] = x[k] - sigma_ * s.contacts[sys_.contact_of(k)].psi;
      if (jac) trip.emplace_back(k, k, 1.0);
    }
    if (ions) {
      r[ia] = (mass - s.ions.mass) / sys_.ion_measure();
      if (jac) trip.emplace_back(ia, ia, dmass / sys_.ion_measure());
    }
    if (jac) {
      jac->resize(size(), size());
      jac->setFromTriplets(trip.begin(), trip.end());
      jac->makeCompressed();
    }
    return true;
  }

  static bool valid(const ValueAndSlope& v) {
    return v.value > 0.0 && std::isfinite(v.value) && v.slope > 0.0;
  }

  const DiscreteSystem& sys_;
  const std::vector<double>* n_n_;
  const std::vector<double>* n_p_;
  double sigma_;
};

// Node-local charge neutrality including the mean ion density; a good start
// for the equilibrium solve.
inline Eigen::VectorXd neutral_guess(const DiscreteSystem& sys) {
  const DeviceScenario& s = sys.scenario();
  const std::size_t n = sys.cells();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + (sys.has_ions() ? 1 : 0)));
  const double mean_ion = sys.has_ions() ? s.ions.mass / sys.ion_measure() : 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vol = sys.mesh().cells[k].volume;
    const double c = (sys.doping_charge(k) + s.ions.charge * sys.ion_volume(k) * mean_ion) / vol;
    x[k] = sys.is_dirichlet(k) ? s.contacts[sys.contact_of(k)].psi : neutral_potential(s.electrons, s.holes, c);
  }
  if (sys.has_ions()) {
    double avg = 0.0;
    for (std::size_t k = 0; k < n; ++k) avg += sys.ion_volume(k) * x[k];
    avg /= sys.ion_measure();
    x[n] = s.ions.statistics.inverse(mean_ion) + s.ions.charge * avg;
  }
  return x;
}

inline PoissonResult solve_poisson_problem(const PoissonProblem& problem, Eigen::VectorXd x,
                                           const PoissonOptions& opts, bool ions) {
  Eigen::VectorXd r, trial_r;
  SparseMatrix jac;
  if (!problem.evaluate(x, r, &jac)) throw DomainError("initial guess leaves the density range");
  const double scale = std::max(1.0, r.lpNorm<Eigen::Infinity>());
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(jac);
  PoissonResult out;
  double norm = r.lpNorm<Eigen::Infinity>();
  int polish = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const bool done = norm <= opts.tolerance * scale;
    if (done && polish >= 2) break;
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw PoissonConvergenceError("singular Poisson Jacobian", norm);
    const Eigen::VectorXd dx = lu.solve(-r);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      const Eigen::VectorXd trial = x + t * dx;
      if (problem.evaluate(trial, trial_r, nullptr)) {
        const double tn = trial_r.lpNorm<Eigen::Infinity>();
        if (tn < norm) {
          x = trial;
          accepted = true;
          break;
        }
      }
      if (done) break;  // polishing only takes full steps
    }
    out.iterations = it + 1;
    if (!accepted) {
      if (done) break;
      throw PoissonConvergenceError("Poisson line search failed", norm);
    }
    if (done) ++polish;
    problem.evaluate(x, r, &jac);
    norm = r.lpNorm<Eigen::Infinity>();
  }
  out.gradient_norm = norm;
  out.converged = norm <= opts.tolerance * scale;
  if (!out.converged) {
    throw PoissonConvergenceError("Poisson solve did not converge, gradient norm " + std::to_string(norm), norm);
  }
  const auto n = static_cast<std::size_t>(x.size()) - (ions ? 1 : 0);
  out.psi.assign(x.data(), x.data() + n);
  if (ions) out.v_a = x[static_cast<Eigen::Index>(n)];
  return out;
}

}  // namespace detail

/// Frozen-density solve: f = C + n_p - n_n, scaled by sigma in [0, 1].
inline PoissonResult solve_constrained_poisson(const DiscreteSystem& sys, const std::vector<double>& n_n,
                                               const std::vector<double>& n_p, double sigma,
                                               const PoissonOptions& opts = {}) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("sigma must lie in [0, 1]");
  if (n_n.size() != sys.cells() || n_p.size() != sys.cells()) {
    throw std::invalid_argument("frozen densities need one value per node");
  }
  detail::PoissonProblem problem(sys, &n_n, &n_p, sigma);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(problem.size());
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    if (sys.is_dirichlet(k)) x[k] = sigma * sys.scenario().contacts[sys.contact_of(k)].psi;
  }
  if (sys.has_ions()) x[problem.size() - 1] = sys.scenario().ions.statistics.inverse(
                          sys.scenario().ions.mass / sys.ion_measure());
  return detail::solve_poisson_problem(problem, x, opts, sys.has_ions());
}

/// Thermal equilibrium: v_n = v_p = 0, psi and v_a from the nonlinear Poisson
/// problem with densities following psi.
inline PoissonResult solve_equilibrium_poisson(const DiscreteSystem& sys, const PoissonOptions& opts = {}) {
  detail::PoissonProblem problem(sys, nullptr, nullptr, 1.0);
  return detail::solve_poisson_problem(problem, detail::neutral_guess(sys), opts, sys.has_ions());
}

/// The equilibrium state (psi_0, v_n = v_p = 0, v_a).
inline StateVector equilibrium_state(const DiscreteSystem& sys, const PoissonOptions& opts = {}) {
  const auto eq = solve_equilibrium_poisson(sys, opts);
  StateVector u = sys.make_state();
  for (std::size_t k = 0; k < sys.cells(); ++k) u.psi(k) = eq.psi[k];
  if (sys.has_ions()) u.v_a() = eq.v_a;
  return u;
}

}  // namespace ddsim
