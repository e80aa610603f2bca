#pragma once

// Finite-difference check of the analytic Jacobian. Node unknowns are probed
// in groups from a distance-2 coloring of the mesh graph (two nodes of a
// group never share a neighbor), the ion potential column on its own, and
// the dense mass row through random directional derivatives.

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ddsim/fvm.hpp"

namespace jactest {

inline std::vector<int> distance2_coloring(const ddsim::FvMesh& mesh) {
  const auto adj = mesh.adjacency();
  std::vector<int> color(mesh.size(), -1);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    std::vector<char> used(64, 0);
    auto mark = [&](int node) {
      if (color[node] >= 0) {
        if (color[node] >= static_cast<int>(used.size())) used.resize(color[node] + 1, 0);
        used[color[node]] = 1;
      }
    };
    for (int l : adj[k]) {
      mark(l);
      for (int m : adj[l]) mark(m);
    }
    int c = 0;
    while (c < static_cast<int>(used.size()) && used[c]) ++c;
    color[k] = c;
  }
  return color;
}

struct Result {
  double worst = 0.0;  ///< max over rows of max |J_fd - J| / max |J| in the row
  double mass_row = 0.0;  ///< worst relative directional error of the mass row
  int colors = 0;
};

inline Result check(const ddsim::DiscreteSystem& sys, const ddsim::StateVector& u, std::mt19937_64& rng,
                    double h = 1e-6) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> jac(sys.jacobian(u));
  const Eigen::Index size = sys.size();
  const std::size_t n = sys.cells();
  const bool ions = sys.has_ions();
  const Eigen::Index mass = ions ? sys.va_index() : -1;

  auto central = [&](const Eigen::VectorXd& dir) {
    ddsim::StateVector up = u, dn = u;
    up.values() += h * dir;
    dn.values() -= h * dir;
    return Eigen::VectorXd((sys.residual(up) - sys.residual(dn)) / (2.0 * h));
  };

  // fd_entries[row] holds (column, value) for every probed column.
  std::vector<std::vector<std::pair<Eigen::Index, double>>> fd(static_cast<std::size_t>(size));
  const auto color = distance2_coloring(sys.mesh());
  Result out;
  out.colors = *std::max_element(color.begin(), color.end()) + 1;
  const auto adj = sys.mesh().adjacency();
  for (int c = 0; c < out.colors; ++c) {
    for (int comp = 0; comp < 3; ++comp) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(size);
      for (std::size_t k = 0; k < n; ++k) {
        if (color[k] == c) dir[3 * k + comp] = 1.0;
      }
      const Eigen::VectorXd col = central(dir);
      // Each node row sees at most one perturbed node among itself and its neighbors.
      for (std::size_t i = 0; i < n; ++i) {
        int owner = color[i] == c ? static_cast<int>(i) : -1;
        for (int l : adj[i]) {
          if (color[l] == c) owner = l;
        }
        if (owner < 0) continue;
        for (int r = 0; r < 3; ++r) fd[3 * i + r].emplace_back(3 * owner + comp, col[3 * i + r]);
      }
    }
  }
  if (ions) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(size);
    dir[mass] = 1.0;
    const Eigen::VectorXd col = central(dir);
    for (Eigen::Index i = 0; i < mass; ++i) fd[i].emplace_back(mass, col[i]);
  }
  for (Eigen::Index i = 0; i < size; ++i) {
    if (i == mass) continue;
    double scale = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(jac, i); it; ++it) {
      scale = std::max(scale, std::fabs(it.value()));
    }
    double err = 0.0;
    for (const auto& [col, value] : fd[i]) err = std::max(err, std::fabs(value - jac.coeff(i, col)));
    out.worst = std::max(out.worst, scale > 0.0 ? err / scale : err);
  }
  if (ions) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 4; ++t) {
      Eigen::VectorXd dir(size);
      for (Eigen::Index i = 0; i < size; ++i) dir[i] = g(rng);
      double exact = 0.0, scale = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(jac, mass); it; ++it) {
        exact += it.value() * dir[it.col()];
        scale += std::fabs(it.value() * dir[it.col()]);
      }
      const double approx = central(dir)[mass];
      out.mass_row = std::max(out.mass_row, std::fabs(exact - approx) / scale);
    }
  }
  return out;
}

// A random state with every derived density in range: psi near `base`,
// quasi-Fermi potentials within +-1, and Dirichlet values on contacts.
inline ddsim::StateVector random_state(const ddsim::DiscreteSystem& sys, const ddsim::StateVector& base,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ddsim::StateVector s = base;
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    s.psi(k) += 0.5 * u(rng);
    s.v_n(k) = u(rng);
    s.v_p(k) = u(rng);
  }
  if (sys.has_ions()) s.v_a() += 0.5 * u(rng);
  sys.apply_dirichlet(s);
  return s;
}

}  // namespace jactest
