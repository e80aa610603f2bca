#include <catch_amalgamated.hpp>

#include <cmath>

#include "ddsim/poisson.hpp"
#include "ddsim/scenarios.hpp"
#include "oracles.hpp"

using namespace ddsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Equilibrium potential matches a dense fixed-point oracle") {
  const DiscreteSystem sys(psc_scenario(2, 0.0, 0.0));
  const auto eq = solve_equilibrium_poisson(sys);
  REQUIRE(eq.converged);
  std::vector<double> x;
  for (const auto& c : sys.mesh().cells) x.push_back(c.center.x);
  const auto ref = oracle::equilibrium_psi_1d(x, {{0, 1, 10.0}, {1, 5, 0.0}, {5, 7, -10.0}}, 1.0);
  double diff = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) diff = std::max(diff, std::fabs(eq.psi[k] - ref[k]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("Equilibrium with ions honors the mass constraint") {
  const DiscreteSystem sys(psc_scenario(3, 0.0, 0.0));
  const auto eq = solve_equilibrium_poisson(sys);
  const auto& ions = sys.scenario().ions;
  double mass = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < sys.cells(); ++k) {
    if (sys.ion_volume(k) == 0.0) continue;
    const double na = ions.statistics(eq.v_a - ions.charge * eq.psi[k]);
    mass += sys.ion_volume(k) * na;
    peak = std::max(peak, na);
  }
  CHECK_THAT(mass, WithinRel(30.0, 1e-10));
  CHECK(peak < 10.0);
}

TEST_CASE("Constrained Poisson solve with frozen carriers") {
  const DiscreteSystem sys(psc_scenario(3, 1.0, 1.0));
  const std::vector<double> nn(sys.cells(), 0.5), np(sys.cells(), 0.25);
  SECTION("sigma = 1 solves the discrete problem") {
    const auto res = solve_constrained_poisson(sys, nn, np, 1.0);
    CHECK(res.converged);
    CHECK(res.gradient_norm <= 1e-9);
    // Discrete mass.
    double mass = 0.0;
    for (std::size_t k = 0; k < sys.cells(); ++k) {
      if (sys.ion_volume(k) > 0.0) {
        mass += sys.ion_volume(k) * sys.scenario().ions.statistics(res.v_a - res.psi[k]);
      }
    }
    CHECK_THAT(mass, WithinRel(30.0, 1e-10));
  }
  SECTION("sigma = 0 gives a flat potential") {
    const auto res = solve_constrained_poisson(sys, nn, np, 0.0);
    for (double p : res.psi) REQUIRE_THAT(p, WithinAbs(0.0, 1e-12));
    // n_a = M_a / |PVK| everywhere.
    CHECK_THAT(sys.scenario().ions.statistics(res.v_a), WithinRel(7.5, 1e-10));
  }
  CHECK_THROWS_AS(solve_constrained_poisson(sys, nn, np, 1.5), DomainError);
  CHECK_THROWS_AS(solve_constrained_poisson(sys, {1.0}, np, 1.0), std::invalid_argument);
}
