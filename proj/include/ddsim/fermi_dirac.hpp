#pragma once

// Fermi-Dirac integral of order 1/2, normalized so that F(eta) ~ exp(eta)
// as eta -> -inf:
//
//   F(eta) = 2/sqrt(pi) * int_0^inf sqrt(xi) / (exp(xi - eta) + 1) dxi
//
// Evaluated with composite 64-point Gauss-Legendre quadrature. The first panel
// uses xi = t^2 to remove the square-root endpoint singularity, the remaining
// panels are placed in xi with width <= 20 so the poles at xi = eta +- i*pi stay
// well outside the Bernstein ellipse of every panel. The tail beyond
// max(eta, 0) + 40 is added in closed form (Boltzmann regime).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace ddsim {

struct ValueAndSlope {
  double value;
  double slope;
};

namespace detail {

struct GaussLegendreRule {
  static constexpr int size = 64;
  std::array<double, size> nodes{};
  std::array<double, size> weights{};
};

inline GaussLegendreRule make_gauss_legendre_64() {
  GaussLegendreRule rule;
  constexpr int n = GaussLegendreRule::size;
  for (int i = 0; i < n / 2; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double pk = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    rule.nodes[i] = static_cast<double>(-x);
    rule.nodes[n - 1 - i] = static_cast<double>(x);
    rule.weights[i] = rule.weights[n - 1 - i] = static_cast<double>(w);
  }
  return rule;
}

inline const GaussLegendreRule& gauss_legendre_64() {
  static const GaussLegendreRule rule = make_gauss_legendre_64();
  return rule;
}

// Occupation f = 1/(exp(x)+1) and f(1-f), without overflow for any x.
inline void fermi_occupation(double x, double& f, double& f_one_minus_f) {
  if (x > 0.0) {
    const double ex = std::exp(-x);
    const double den = 1.0 + ex;
    f = ex / den;
    f_one_minus_f = ex / (den * den);
  } else {
    const double ex = std::exp(x);
    const double den = 1.0 + ex;
    f = 1.0 / den;
    f_one_minus_f = ex / (den * den);
  }
}

}  // namespace detail

/// F(eta) and F'(eta) for the order-1/2 Fermi-Dirac integral.
inline ValueAndSlope fermi_dirac_half(double eta) {
  constexpr double norm = 2.0 / 1.7724538509055160273;  // 2/sqrt(pi)
  if (eta < -30.0) {
    // Alternating series sum_k (-1)^(k+1) e^{k eta} / k^{3/2}; four terms reach
    // double precision here.
    double value = 0.0;
    double slope = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 4; ++k) {
      const double ek = std::exp(k * eta);
      value += sign * ek / (k * std::sqrt(static_cast<double>(k)));
      slope += sign * ek / std::sqrt(static_cast<double>(k));
      sign = -sign;
    }
    return {value, slope};
  }

  const auto& rule = detail::gauss_legendre_64();
  double integral = 0.0;
  double integral_slope = 0.0;

  // Panel 1 in t = sqrt(xi).
  const double split = std::max(2.0, eta - 10.0);
  {
    const double half = 0.5 * std::sqrt(split);
    for (int i = 0; i < detail::GaussLegendreRule::size; ++i) {
      const double t = half * (1.0 + rule.nodes[i]);
      const double xi = t * t;
      double f = 0.0;
      double g = 0.0;
      detail::fermi_occupation(xi - eta, f, g);
      const double w = rule.weights[i] * half * 2.0 * xi;
      integral += w * f;
      integral_slope += w * g;
    }
  }

  const double cutoff = std::max(eta, 0.0) + 40.0;
  const int panels = static_cast<int>(std::ceil((cutoff - split) / 20.0));
  const double width = (cutoff - split) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = split + p * width;
    const double half = 0.5 * width;
    const double mid = a + half;
    for (int i = 0; i < detail::GaussLegendreRule::size; ++i) {
      const double xi = mid + half * rule.nodes[i];
      double f = 0.0;
      double g = 0.0;
      detail::fermi_occupation(xi - eta, f, g);
      const double w = rule.weights[i] * half * std::sqrt(xi);
      integral += w * f;
      integral_slope += w * g;
    }
  }

  // int_X^inf sqrt(xi) e^{eta - xi} dxi, leading asymptotic terms.
  const double tail =
      std::exp(eta - cutoff) * std::sqrt(cutoff) * (1.0 + 0.5 / cutoff - 0.25 / (cutoff * cutoff));
  integral += tail;
  integral_slope += tail;
  return {norm * integral, norm * integral_slope};
}

/// Solves F(eta) = density for the order-1/2 Fermi-Dirac integral.
///
/// Safeguarded Newton on log F(eta) - log(density) inside the bracket
/// [log n, max(0, (3 sqrt(pi) n / 4)^{2/3})], which follows from
/// F(eta) <= exp(eta) and from F exceeding its degenerate limit.
inline double fermi_dirac_half_inverse(double density) {
  const double log_n = std::log(density);
  double lo = log_n;
  double hi = std::max(0.0, std::pow(0.75 * 1.7724538509055160273 * density, 2.0 / 3.0));
  if (lo < -30.0) {
    // Series regime: a couple of fixed-point corrections are exact to rounding.
    double eta = log_n;
    for (int i = 0; i < 4; ++i) {
      const auto fs = fermi_dirac_half(eta);
      eta -= (std::log(fs.value) - log_n) * fs.value / fs.slope;
    }
    return eta;
  }
  double eta = density < 1.0 ? log_n + density / 2.8284271247461900976 : 0.5 * (lo + hi);
  if (eta <= lo || eta >= hi) eta = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto fs = fermi_dirac_half(eta);
    const double h = std::log(fs.value) - log_n;
    if (h > 0.0) {
      hi = eta;
    } else {
      lo = eta;
    }
    const double step = h * fs.value / fs.slope;
    double next = eta - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - eta) <= 4e-16 * (1.0 + std::fabs(eta))) return next;
    eta = next;
    if (hi - lo <= 4e-16 * (1.0 + std::fabs(eta))) return eta;
  }
  return eta;
}

}  // namespace ddsim
