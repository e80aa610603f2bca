#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddsim/geometry.hpp"
#include "ddsim/statistics.hpp"

namespace ddsim {

inline constexpr int electron_charge = -1;
inline constexpr int hole_charge = +1;

/// r(n_n, n_p) = r0_rad + [srh] / (tau_n (n_n + n_n,tau) + tau_p (n_p + n_p,tau)).
struct RecombinationModel {
  double radiative = 0.0;
  bool srh = false;
  double tau_n = 1.0;
  double tau_p = 1.0;
  double reference_n = 1.0;
  double reference_p = 1.0;

  struct Rate {
    double value;
    double d_dn;
    double d_dp;
  };

  Rate rate(double n_n, double n_p) const {
    Rate r{radiative, 0.0, 0.0};
    if (srh) {
      const double den = tau_n * (n_n + reference_n) + tau_p * (n_p + reference_p);
      r.value += 1.0 / den;
      r.d_dn = -tau_n / (den * den);
      r.d_dp = -tau_p / (den * den);
    }
    return r;
  }

  /// Upper bound on r for positive densities; infinite when a reference density is zero.
  double rate_bound() const {
    if (!srh) return radiative;
    const double m = std::min(tau_n * reference_n, tau_p * reference_p);
    return m > 0.0 ? radiative + 1.0 / m : std::numeric_limits<double>::infinity();
  }

  bool operator==(const RecombinationModel&) const = default;
};

/// R = r(n_n, n_p) n_n n_p (1 - exp(-s)), s = F_n^{-1}(n_n) + F_p^{-1}(n_p).
/// In quasi-Fermi variables s = v_n + v_p, which is how the assembly calls it.
inline double recombination_from_sum(const RecombinationModel& model, double n_n, double n_p,
                                     double s) {
  return model.rate(n_n, n_p).value * n_n * n_p * -std::expm1(-s);
}

inline double recombination(const RecombinationModel& model, const Statistics& f_n,
                            const Statistics& f_p, double n_n, double n_p) {
  const double s = f_n.inverse(n_n) + f_p.inverse(n_p);
  return recombination_from_sum(model, n_n, n_p, s);
}

/// Photogeneration profiles. Exponential decay is restricted to a support box;
/// the Gaussian beam uses G0 exp(-|x - c|^2 / (2 sigma^2)).
struct GenerationProfile {
  enum class Kind { Zero, ExponentialDecay, GaussianBeam };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  Point direction{1.0, 0.0};
  Point origin{};
  Box support = Box::everywhere();
  Point center{};
  double width = 0.5;

  static GenerationProfile zero() { return {}; }

  static GenerationProfile exponential_decay(double amplitude, Point direction, Point origin,
                                             Box support) {
    GenerationProfile g;
    g.kind = Kind::ExponentialDecay;
    g.amplitude = amplitude;
    g.direction = direction;
    g.origin = origin;
    g.support = support;
    return g;
  }

  static GenerationProfile gaussian_beam(double amplitude, Point center, double width) {
    if (!(width > 0.0)) throw DomainError("beam width must be positive");
    GenerationProfile g;
    g.kind = Kind::GaussianBeam;
    g.amplitude = amplitude;
    g.center = center;
    g.width = width;
    return g;
  }

  bool in_support(Point x) const { return kind != Kind::ExponentialDecay || support.contains(x); }

  /// Profile value ignoring the support restriction.
  double unrestricted(Point x) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::ExponentialDecay: {
        const double s = (x.x - origin.x) * direction.x + (x.y - origin.y) * direction.y;
        return amplitude * std::exp(-s);
      }
      case Kind::GaussianBeam:
        return amplitude * std::exp(-squared_distance(x, center) / (2.0 * width * width));
    }
    return 0.0;
  }

  double operator()(Point x) const { return in_support(x) ? unrestricted(x) : 0.0; }

  bool operator==(const GenerationProfile&) const = default;
};

inline double eval_generation(const GenerationProfile& g, Point x) { return g(x); }

/// The optional ionic species: immobile at equilibrium, fixed total mass,
/// present only in the listed regions.
struct IonSpecies {
  int charge = 0;
  double mass = 0.0;
  std::vector<int> regions;
  Statistics statistics = Statistics::blakemore(1.0);

  bool active() const noexcept { return charge != 0; }
  bool operator==(const IonSpecies&) const = default;
};

}  // namespace ddsim
