#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <limits>

#include "ddsim/bounds.hpp"
#include "ddsim/scenarios.hpp"
#include "stampacchia_harness.hpp"

using namespace ddsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Stampacchia threshold closed form") {
  CHECK(stampacchia_root(1.5, 2.0, 3.0, 2.0, 0.0) == 1.5);
  // beta^{beta/(beta-1)} / (beta-1) = 4 for beta = 2.
  CHECK_THAT(stampacchia_root(0.0, 1.0, 1.0, 2.0, 1.0), WithinRel(4.0, 1e-15));
  CHECK_THAT(stampacchia_root(1.0, 8.0, 3.0, 2.0, 1.0), WithinRel(1.0 + 2.0 * 4.0, 1e-15));
  CHECK_THROWS_AS(stampacchia_root(0.0, 1.0, 1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(stampacchia_root(0.0, 0.0, 1.0, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(stampacchia_root(0.0, 1.0, 1.0, 2.0, -1.0), DomainError);
}

TEST_CASE("Stampacchia threshold monotonicity") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double z = u(rng), a = u(rng), b = u(rng), e = u(rng);
    const double base = stampacchia_root(0.0, z, a, b, e);
    CHECK(stampacchia_root(0.0, z * 1.1, a, b, e) > base);
    CHECK(stampacchia_root(0.0, z, a, b, e * 1.1) > base);
    CHECK(stampacchia_root(0.0, z, a * 1.1, b, e) < base);
  }
}

TEST_CASE("Admissible level-set functions vanish beyond the threshold") {
  std::mt19937_64 rng(77);
  int found = 0;
  for (int tries = 0; found < 100 && tries < 200000; ++tries) {
    const auto c = stamp::random_candidate(rng);
    const double xs = stampacchia_root(c.x0, c.zeta, c.alpha, c.beta, c.e0);
    if (!stamp::admissible(c, 1.5 * std::max(xs - c.x0, c.length))) continue;
    ++found;
    INFO("x0 " << c.x0 << " zeta " << c.zeta << " alpha " << c.alpha << " beta " << c.beta << " E0 " << c.e0);
    CHECK(c(xs) == 0.0);
    CHECK(c(xs + 1.0) == 0.0);
  }
  CHECK(found == 100);
}

TEST_CASE("Density bound N-bar") {
  BoundInputs in;
  in.boundary_density = 2.0;
  in.norm_doping = 3.0;
  in.norm_generation = 4.0;
  in.r0 = 1.0;
  in.debye_length = 1.0;
  const double expected = 2.0 * std::exp(3.0 + (2.0 + 1.0) / std::sqrt(2.0));
  CHECK_THAT(density_upper_bound(in), WithinRel(expected, 1e-14));
  auto more = in;
  more.norm_generation = 9.0;
  CHECK(density_upper_bound(more) > density_upper_bound(in));
  more = in;
  more.debye_length = 2.0;
  CHECK(density_upper_bound(more) < density_upper_bound(in));
  more = in;
  more.ion_charge = 1;
  more.ion_saturation = 10.0;
  CHECK(density_upper_bound(more) > density_upper_bound(in));
  CHECK(density_upper_bound(in) >= in.boundary_density);
  more = in;
  more.p = 0.4;
  CHECK_THROWS_AS(density_upper_bound(more), DomainError);
}

TEST_CASE("Generation norms scale with the amplitude") {
  const DiscreteSystem a(psc_scenario(2, 1.0, 1.0));
  const DiscreteSystem b(psc_scenario(2, 1.0, 3.0));
  for (double p : {2.0, 4.0, std::numeric_limits<double>::infinity()}) {
    BoundsConfig cfg;
    cfg.p = p;
    CHECK_THAT(bound_inputs(b, cfg).norm_generation, WithinRel(3.0 * bound_inputs(a, cfg).norm_generation, 1e-13));
  }
  BoundsConfig cfg;
  // ||G||_inf of the exponential profile is G0.
  CHECK_THAT(bound_inputs(a, cfg).norm_generation, WithinRel(std::exp(-0.5 * 1.26e-2 / 2.0), 1e-2));
}

TEST_CASE("Certificate and verdicts on a converged PSC run") {
  const auto run = solve_scenario(psc_parameters(3));
  REQUIRE(run.converged);
  const auto cert = bound_certificate(*run.system);
  CHECK(cert.density >= cert.inputs.boundary_density);
  CHECK(cert.potential > 0.0);
  CHECK(cert.quasi_fermi > 0.0);
  CHECK(cert.ion_potential > 0.0);
  CHECK(cert.stampacchia.alpha == 4.0);
  CHECK(cert.stampacchia.beta == 2.0);
  const auto rep = verify_solution_bounds(*run.system, run.state, cert);
  CHECK(rep.hard_ok());
  REQUIRE(rep.find("n_a < S_a") != nullptr);
  CHECK(rep.find("n_a < S_a")->margin > 0.0);

  SECTION("a corrupted ion density trips the hard check") {
    auto f = field_values(*run.system, run.state);
    for (std::size_t k = 0; k < f.n_a.size(); ++k) {
      if (run.system->ion_volume(k) > 0.0) {
        f.n_a[k] = 10.0;
        break;
      }
    }
    const auto bad = verify_field_bounds(*run.system, f, cert);
    CHECK_FALSE(bad.hard_ok());
    CHECK_FALSE(bad.find("n_a < S_a")->passed);
  }
  SECTION("a negative density trips positivity") {
    auto f = field_values(*run.system, run.state);
    f.n_n[5] = -1e-3;
    const auto bad = verify_field_bounds(*run.system, f, cert);
    CHECK_FALSE(bad.hard_ok());
    CHECK(bad.find("n_n positive")->cell == 5);
  }
}
