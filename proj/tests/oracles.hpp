#pragma once

// Reference implementations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace oracle {

// The integrands below are even and analytic in s after t = s^2, so the
// plain trapezoidal rule on [0, inf) converges geometrically in 1/h.
inline double even_trapezoid(double (*f)(double, double), double eta, double h) {
  const double top = std::sqrt(std::max(eta, 0.0) + 80.0);
  const long steps = static_cast<long>(top / h) + 1;
  // Compensated sum; thousands of terms of similar size.
  double total = 0.5 * f(0.0, eta), carry = 0.0;
  for (long i = 1; i <= steps; ++i) {
    const double y = f(static_cast<double>(i) * h, eta) - carry;
    const double t = total + y;
    carry = (t - total) - y;
    total = t;
  }
  return h * total;
}

// FD_{1/2}(eta) = (4/sqrt(pi)) int_0^inf s^2 / (exp(s^2 - eta) + 1) ds.
inline double fd_half(double eta) {
  auto g = [](double s, double e) {
    const double x = s * s - e;
    return x > 0 ? s * s * std::exp(-x) / (1.0 + std::exp(-x)) : s * s / (1.0 + std::exp(x));
  };
  if (eta < 0.0) {
    // Factor out e^eta so tiny values keep full relative precision.
    auto gm = [](double s, double e) { return s * s * std::exp(-s * s) / (1.0 + std::exp(e - s * s)); };
    return 4.0 / std::sqrt(M_PI) * std::exp(eta) * even_trapezoid(gm, eta, 2e-3);
  }
  return 4.0 / std::sqrt(M_PI) * even_trapezoid(g, eta, 2e-3);
}

// d/d eta FD_{1/2} = (2/sqrt(pi)) int_0^inf ds / (exp(s^2 - eta) + 1), by parts.
inline double fd_half_slope(double eta) {
  if (eta < 0.0) {
    auto gm = [](double s, double e) { return std::exp(-s * s) / (1.0 + std::exp(e - s * s)); };
    return 2.0 / std::sqrt(M_PI) * std::exp(eta) * even_trapezoid(gm, eta, 2e-3);
  }
  auto g = [](double s, double e) {
    const double x = s * s - e;
    return x > 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
  };
  return 2.0 / std::sqrt(M_PI) * even_trapezoid(g, eta, 2e-3);
}

// Classical Scharfetter-Gummel flux, K -> L, for n = exp(v - z psi):
//   T d (n_K - n_L e^d) / (e^d - 1),  d = z (psi_L - psi_K).
inline double scharfetter_gummel(int z, double psi_k, double psi_l, double v_k, double v_l, double t) {
  const double nk = std::exp(v_k - z * psi_k);
  const double nl = std::exp(v_l - z * psi_l);
  const double d = z * (psi_l - psi_k);
  if (d == 0.0) return t * (nk - nl);
  return t * d * (nk - nl * std::exp(d)) / std::expm1(d);
}

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    if (a[p][c] == 0.0) throw std::runtime_error("singular matrix");
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

struct Layer1d {
  double a, b, doping;
};

// Equilibrium electrostatics of a layered 1-D device with Fermi-Dirac 1/2
// electrons and holes:
//   lambda^2 (psi_i - psi_{i-1})/h etc. = |box_i| (C + FD(-psi) - FD(psi)),
// ohmic ends at local neutrality. Fixed-point iteration on the linearized
// charge, each step a dense solve.
inline std::vector<double> equilibrium_psi_1d(const std::vector<double>& x, const std::vector<Layer1d>& layers,
                                              double lambda, int* iterations = nullptr) {
  const std::size_t n = x.size();
  // Box volumes and doping integrals, splitting boxes at layer edges.
  std::vector<double> vol(n, 0.0), charge(n, 0.0);
  auto add_piece = [&](std::size_t i, double lo, double hi) {
    for (const auto& l : layers) {
      const double a = std::max(lo, l.a), b = std::min(hi, l.b);
      if (b > a) {
        vol[i] += b - a;
        charge[i] += (b - a) * l.doping;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? x[0] : 0.5 * (x[i - 1] + x[i]);
    const double hi = i + 1 == n ? x[n - 1] : 0.5 * (x[i] + x[i + 1]);
    add_piece(i, lo, hi);
  }
  auto neutral = [](double c) {
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (lo + hi);
      const double q = fd_half(-m) - fd_half(m) + c;
      (q > 0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  };
  // Few distinct box charges; the bisection is the expensive part.
  std::map<double, double> neutral_cache;
  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = charge[i] / vol[i];
    auto it = neutral_cache.find(c);
    if (it == neutral_cache.end()) it = neutral_cache.emplace(c, neutral(c)).first;
    psi[i] = it->second;
  }
  const double left = psi[0], right = psi[n - 1];
  const double l2 = lambda * lambda;
  int it = 0;
  for (; it < 200; ++it) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double tl = l2 / (x[i] - x[i - 1]), tr = l2 / (x[i + 1] - x[i]);
      const double q = charge[i] + vol[i] * (fd_half(-psi[i]) - fd_half(psi[i]));
      const double dq = -vol[i] * (fd_half_slope(-psi[i]) + fd_half_slope(psi[i]));
      a[i][i - 1] = -tl;
      a[i][i + 1] = -tr;
      a[i][i] = tl + tr - dq;
      rhs[i] = q - dq * psi[i];
    }
    a[0][0] = 1.0;
    rhs[0] = left;
    a[n - 1][n - 1] = 1.0;
    rhs[n - 1] = right;
    const auto next = dense_solve(a, rhs);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::fabs(next[i] - psi[i]));
    psi = next;
    if (change < 1e-11) break;  // roundoff floor is near 1e-12
  }
  if (iterations) *iterations = it + 1;
  return psi;
}

}  // namespace oracle
