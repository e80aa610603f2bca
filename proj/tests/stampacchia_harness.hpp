#pragma once

// Synthetic level-set functions for the Stampacchia threshold: candidates
// E(x) = E0 max(0, 1 - (x - x0)/L)^m are kept when they satisfy
// E(y) (y - x)^alpha <= zeta E(x)^beta on a sample grid.

#include <cmath>
#include <random>
#include <vector>

namespace stamp {

struct Candidate {
  double x0, zeta, alpha, beta, e0, length, power;

  double operator()(double x) const {
    const double t = 1.0 - (x - x0) / length;
    return t > 0.0 ? e0 * std::pow(t, power) : 0.0;
  }
};

inline bool admissible(const Candidate& c, double span, int samples = 160) {
  std::vector<double> xs, es;
  for (int i = 0; i <= samples; ++i) {
    xs.push_back(c.x0 + span * i / samples);
    es.push_back(c(xs.back()));
  }
  for (int i = 0; i <= samples; ++i) {
    for (int j = i + 1; j <= samples; ++j) {
      if (es[j] * std::pow(xs[j] - xs[i], c.alpha) > c.zeta * std::pow(es[i], c.beta) * (1.0 + 1e-12)) return false;
    }
  }
  return true;
}

inline Candidate random_candidate(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Candidate c;
  c.x0 = -2.0 + 4.0 * u(rng);
  c.zeta = 0.2 + 3.0 * u(rng);
  c.alpha = 0.5 + 3.5 * u(rng);
  c.beta = 1.1 + 2.0 * u(rng);
  c.e0 = 0.05 + 2.0 * u(rng);
  c.length = 0.05 + 6.0 * u(rng);
  c.power = 1.0 + 30.0 * u(rng);
  return c;
}

}  // namespace stamp
