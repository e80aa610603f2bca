#pragma once

// Damped Newton iteration on a DiscreteSystem and warm-started continuation.

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ddsim/fvm.hpp"

namespace ddsim {

struct NewtonConfig {
  int max_iterations = 60;
  double absolute_tolerance = 1e-9;
  double relative_tolerance = 1e-12;
  double initial_damping = 0.1;
  double damping_growth = 2.0;
  double minimum_damping = 1e-4;
  int polish_steps = 2;  ///< extra full steps after convergence while the residual still drops

  bool operator==(const NewtonConfig&) const = default;
};

enum class SolveStatus { Converged, MaxIterations, SingularLinearSolve, DensityRangeUnrecoverable };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::SingularLinearSolve: return "singular-linear-solve";
    case SolveStatus::DensityRangeUnrecoverable: return "density-range-unrecoverable";
  }
  return "unknown";
}

struct NewtonStep {
  double residual_norm = 0.0;  ///< after the step
  double damping = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  bool converged = false;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<NewtonStep> history;
  StateVector state;
  double wall_time = 0.0;  ///< seconds
  std::string message;

  int iterations() const noexcept { return static_cast<int>(history.size()); }
};

namespace detail {

inline bool try_residual(const DiscreteSystem& sys, const StateVector& u, Eigen::VectorXd& r) {
  try {
    sys.assemble(u, &r, nullptr);
  } catch (const DensityRangeError&) {
    return false;
  }
  return r.allFinite();
}

}  // namespace detail

/// Damped Newton: the damping factor starts at cfg.initial_damping, grows by
/// cfg.damping_growth after each accepted step (up to 1) and is halved while
/// the trial iterate has invalid densities or a larger residual. At the
/// minimum factor a density-valid step is taken regardless.
inline SolveReport newton_solve(const DiscreteSystem& sys, const StateVector& u0, const NewtonConfig& cfg = {}) {
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.state = u0;
  auto finish = [&](SolveStatus status, std::string msg) {
    rep.status = status;
    rep.converged = status == SolveStatus::Converged;
    rep.message = std::move(msg);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  Eigen::VectorXd r, trial_r;
  SparseMatrix jac;
  try {
    sys.assemble(rep.state, &r, &jac);
  } catch (const DensityRangeError& e) {
    return finish(SolveStatus::DensityRangeUnrecoverable, e.what());
  }
  double norm = r.lpNorm<Eigen::Infinity>();
  rep.initial_residual = norm;
  rep.final_residual = norm;
  const double target = cfg.absolute_tolerance + cfg.relative_tolerance * norm;
  if (norm <= target && cfg.polish_steps == 0) return finish(SolveStatus::Converged, "");

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(jac);
  double damping = cfg.initial_damping;
  int polish = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const bool done = norm <= target;
    if (done && (polish >= cfg.polish_steps || norm == 0.0)) break;
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) return finish(SolveStatus::SingularLinearSolve, lu.lastErrorMessage());
    const Eigen::VectorXd du = lu.solve(-r);
    if (!du.allFinite()) return finish(SolveStatus::SingularLinearSolve, "non-finite Newton update");

    StateVector trial = rep.state;
    if (done) {
      // Polishing: a full step, kept only if it lowers the residual.
      trial.values() = rep.state.values() + du;
      if (!detail::try_residual(sys, trial, trial_r) || !(trial_r.lpNorm<Eigen::Infinity>() < norm)) break;
      rep.state = std::move(trial);
      ++polish;
      rep.history.push_back({trial_r.lpNorm<Eigen::Infinity>(), 1.0});
    } else {
      bool accepted = false;
      double valid_min_step = -1.0;
      while (true) {
        trial.values() = rep.state.values() + damping * du;
        const bool valid = detail::try_residual(sys, trial, trial_r);
        if (valid && trial_r.lpNorm<Eigen::Infinity>() <= norm) {
          accepted = true;
          break;
        }
        if (damping <= cfg.minimum_damping) {
          valid_min_step = valid ? damping : -1.0;
          break;
        }
        damping = std::max(cfg.minimum_damping, damping * 0.5);
      }
      if (!accepted && valid_min_step < 0.0) {
        return finish(SolveStatus::DensityRangeUnrecoverable,
                      "no density-valid iterate at minimum damping");
      }
      rep.state = std::move(trial);
      rep.history.push_back({trial_r.lpNorm<Eigen::Infinity>(), damping});
      damping = std::min(1.0, damping * cfg.damping_growth);
    }
    try {
      sys.assemble(rep.state, &r, &jac);
    } catch (const DensityRangeError& e) {
      return finish(SolveStatus::DensityRangeUnrecoverable, e.what());
    }
    norm = r.lpNorm<Eigen::Infinity>();
    rep.final_residual = norm;
  }
  if (norm <= target) return finish(SolveStatus::Converged, "");
  return finish(SolveStatus::MaxIterations, "residual " + std::to_string(norm) + " after " +
                                                std::to_string(rep.history.size()) + " iterations");
}

/// Solves along `ladder`, warm-starting each rung from the previous one.
/// `family` builds the discrete system for a parameter value. Stops after the
/// first failing rung, whose report is the last entry.
inline std::vector<SolveReport> continuation_solve(const std::function<DiscreteSystem(double)>& family,
                                                   const std::vector<double>& ladder, const StateVector& start,
                                                   const NewtonConfig& cfg = {}) {
  std::vector<SolveReport> reports;
  StateVector u = start;
  for (double value : ladder) {
    const DiscreteSystem sys = family(value);
    StateVector guess = u;
    sys.apply_dirichlet(guess);
    reports.push_back(newton_solve(sys, guess, cfg));
    if (!reports.back().converged) break;
    u = reports.back().state;
  }
  return reports;
}

/// n points from a to b inclusive.
inline std::vector<double> linear_ladder(double a, double b, int n) {
  std::vector<double> v;
  if (n <= 0) return v;
  if (n == 1 || a == b) return {b};
  for (int i = 0; i < n; ++i) v.push_back(i + 1 == n ? b : a + (b - a) * i / (n - 1));
  return v;
}

/// Decade steps from min(first, target) up to target, ending exactly at target.
inline std::vector<double> decade_ladder(double target, double first = 1e-2) {
  std::vector<double> v;
  if (!(target > 0.0)) return v;
  double g = std::min(first, target);
  while (g < target * (1.0 - 1e-12)) {
    v.push_back(g);
    g *= 10.0;
  }
  v.push_back(target);
  return v;
}

}  // namespace ddsim
