#include <catch_amalgamated.hpp>

#include <cmath>

#include "ddsim/newton.hpp"
#include "ddsim/poisson.hpp"
#include "ddsim/scenarios.hpp"

using namespace ddsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Continuation ladders") {
  const auto v = linear_ladder(0.0, 2.0, 10);
  REQUIRE(v.size() == 10);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 2.0);
  CHECK(linear_ladder(0.0, 0.0, 10) == std::vector<double>{0.0});
  CHECK(decade_ladder(100.0) == std::vector<double>{1e-2, 1e-1, 1.0, 10.0, 100.0});
  CHECK(decade_ladder(0.5) == std::vector<double>{1e-2, 1e-1, 0.5});
  CHECK(decade_ladder(1e-3) == std::vector<double>{1e-3});
  CHECK(decade_ladder(0.0).empty());
  CHECK(voltage_ladder(2.0).size() == 10);
}

TEST_CASE("Newton from the exact equilibrium returns immediately") {
  const DiscreteSystem sys(psc_scenario(2, 0.0, 0.0));
  const auto u = equilibrium_state(sys);
  const auto rep = newton_solve(sys, u, NewtonConfig{});
  CHECK(rep.converged);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.final_residual <= 1e-9);
}

TEST_CASE("Newton converges along the voltage ladder") {
  const auto run = solve_scenario(psc_parameters(2));
  REQUIRE(run.converged);
  for (const auto& r : run.voltage_reports) {
    CHECK(r.converged);
    CHECK(r.iterations() <= 20);
    // Residual history ends below tolerance.
    CHECK(r.final_residual <= 1e-9);
  }
  REQUIRE_FALSE(run.generation_reports.empty());
  CHECK(run.generation_reports.back().final_residual <= 1e-9);
}

TEST_CASE("Solves are deterministic") {
  const auto a = solve_scenario(psc_parameters(3));
  const auto b = solve_scenario(psc_parameters(3));
  REQUIRE(a.converged);
  CHECK(a.state == b.state);
}

TEST_CASE("An iteration cap reports MaxIterations instead of a state") {
  NewtonConfig cfg;
  cfg.max_iterations = 1;
  const auto run = solve_scenario(psc_parameters(2), cfg);
  CHECK_FALSE(run.converged);
  REQUIRE_FALSE(run.voltage_reports.empty());
  CHECK(run.voltage_reports.back().status == SolveStatus::MaxIterations);
}

TEST_CASE("Damping history starts at the initial factor") {
  const DiscreteSystem dark(psc_scenario(2, 0.0, 0.0));
  const auto u0 = equilibrium_state(dark);
  const DiscreteSystem biased(psc_scenario(2, 0.5, 0.0));
  StateVector guess = u0;
  biased.apply_dirichlet(guess);
  const auto rep = newton_solve(biased, guess);
  REQUIRE(rep.converged);
  REQUIRE(rep.history.size() >= 2);
  CHECK(rep.history.front().damping <= 0.1);
  for (const auto& step : rep.history) CHECK(step.damping <= 1.0);
}
