#include <doctest.h>

#include <cmath>

#include "perfhom/capacity.hpp"

using namespace perfhom;

TEST_CASE("cap_ball closed forms") {
  CHECK(cap_ball(1.0, 3) == doctest::Approx(4 * M_PI));
  CHECK(cap_ball(0.25, 3) == doctest::Approx(M_PI));
  CHECK(cap_ball(1.0 / std::exp(1.0), 2) == doctest::Approx(2 * M_PI));
  CHECK(cap_ball(0.0, 3) == 0.0);
  CHECK(cap_ball(0.0, 2) == 0.0);
  CHECK_THROWS(cap_ball(1.0, 2));  // relative capacity undefined for r >= 1
  CHECK_THROWS(cap_ball(-0.1, 3));
  CHECK_THROWS(cap_ball(0.5, 5));
}

TEST_CASE("fundamental solution") {
  CHECK(fundamental_solution(1.0, 3) == doctest::Approx(1.0 / (4 * M_PI)));
  CHECK(fundamental_solution(2.0, 3) == doctest::Approx(1.0 / (8 * M_PI)));
  CHECK(fundamental_solution(1.0, 2) == doctest::Approx(0.0));
  CHECK(fundamental_solution(std::exp(-1.0), 2) == doctest::Approx(1.0 / (2 * M_PI)));
  CHECK_THROWS(fundamental_solution(0.0, 3));
}

TEST_CASE("variational capacity approaches the closed form") {
  SUBCASE("n=3 ball") {
    const CapacityResult c = cap_variational(ShapeSpec::ball(0.25), 3, 2.0, 1.0 / 24);
    CHECK(c.value == doctest::Approx(M_PI).epsilon(0.05));
    CHECK(c.residual <= 1e-9);
  }
  SUBCASE("n=2 ball relative to B_1") {
    const CapacityResult c = cap_variational(ShapeSpec::ball(0.25), 2, 1.0, 1.0 / 64);
    CHECK(c.value == doctest::Approx(2 * M_PI / std::log(4.0)).epsilon(0.05));
  }
  SUBCASE("empty shape") {
    const CapacityResult c = cap_variational(ShapeSpec::empty(), 3, 2.0, 0.125);
    CHECK(c.value == 0.0);
  }
  SUBCASE("mesh refinement convergence (n=2, error shrinks >= 1.5x per halving)") {
    const double target = 2 * M_PI / std::log(4.0);
    const double e1 = std::abs(cap_variational(ShapeSpec::ball(0.25), 2, 1.0, 1.0 / 32).value - target);
    const double e2 = std::abs(cap_variational(ShapeSpec::ball(0.25), 2, 1.0, 1.0 / 64).value - target);
    const double e3 = std::abs(cap_variational(ShapeSpec::ball(0.25), 2, 1.0, 1.0 / 128).value - target);
    CHECK(e1 / e2 >= 1.5);
    CHECK(e2 / e3 >= 1.5);
  }
  SUBCASE("monotonicity: ball inside box has smaller capacity") {
    const double cb = cap_variational(ShapeSpec::ball(0.2), 3, 2.0, 1.0 / 16).value;
    const double cx = cap_variational(ShapeSpec::box({0.2, 0.2, 0.2}), 3, 2.0, 1.0 / 16).value;
    CHECK(cb <= cx * (1 + 1e-6)); // the ball is inscribed in the box
  }
}

TEST_CASE("equilibrium potential: profile, bounds, exact discrete identities") {
  CapacityResult cap;
  const double r = 0.3;
  CapParams params;
  params.bc_passes = 1; // zero-Dirichlet box: identities are exact discretely
  const ScalarField phi = equilibrium_potential(ShapeSpec::ball(r), 3, 2.4, 0.05, &cap, params);
  const GridSpec& g = phi.spec;

  SUBCASE("phi <= 1 everywhere, = 1 on the shape") {
    double mx = -1;
    for (double v : phi.values) {
      CHECK(v >= -1e-13);
      mx = std::max(mx, v);
    }
    CHECK(mx == doctest::Approx(1.0));
  }
  SUBCASE("ray profile matches r/|x| within 3% on [2r, box/2]") {
    for (double x = 2 * r; x <= 1.2; x += 0.1) {
      const int i = int(std::lround((x - g.origin[0]) / g.h));
      const std::int64_t idx = g.index(i, g.nodes[1] / 2, g.nodes[2] / 2);
      const double xr = g.pos(0, i);
      const double expect = r / xr * (1.0 - xr / 2.4); // truncated-box ball potential
      CHECK(phi.values[size_t(idx)] == doctest::Approx(expect).epsilon(0.03));
    }
  }
  SUBCASE("far-field bound phi <= M^(n-2)/|x|^(n-2) outside B_M") {
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const Vec3 p = g.node_pos(i);
      const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      if (rho <= r * 1.5) continue;
      CHECK(phi.values[size_t(i)] <= r / rho + 1e-9);
    }
  }
  SUBCASE("energy and flux identities are exact for the zero-BC box") {
    const double by_energy = 2.0 * dirichlet_energy(phi);
    const double by_flux_half = shell_flux(phi, {0, 0, 0}, 1.2);
    const double by_flux_near = shell_flux(phi, {0, 0, 0}, 0.7);
    CHECK(by_energy == doctest::Approx(cap.value).epsilon(1e-10));
    CHECK(by_flux_half == doctest::Approx(cap.value).epsilon(1e-9));
    CHECK(by_flux_near == doctest::Approx(cap.value).epsilon(1e-9));
  }
}

TEST_CASE("farfield_check: ball deviation small, profile machinery") {
  CapacityResult cap;
  const ScalarField phi = equilibrium_potential(ShapeSpec::ball(0.25), 3, 3.0, 1.0 / 20, &cap);
  const FarfieldProfile prof = farfield_check(phi, cap.value, 0.25);
  REQUIRE(prof.rho.size() >= 3);
  // Balls are their own far-field equivalent: deviation stays small at all
  // radii once the monopole boundary pass is applied.
  for (std::size_t i = 0; i < prof.rho.size(); ++i)
    if (prof.rho[i] >= 0.5 && prof.rho[i] <= 1.5) CHECK(prof.deviation[i] < 0.05);
  CHECK_THROWS(farfield_check(phi, -1.0, 0.25));
}

TEST_CASE("discrete node capacity scaling") {
  SUBCASE("n=3: value/h constant within 10% across three refinements") {
    const double c1 = discrete_node_capacity(1.0 / 32, 3) * 32;
    const double c2 = discrete_node_capacity(1.0 / 64, 3) * 64;
    const double c3 = discrete_node_capacity(1.0 / 128, 3) * 128;
    CHECK(std::abs(c1 - c2) / c2 < 0.10);
    CHECK(std::abs(c2 - c3) / c3 < 0.10);
    // capacity monotone in set inclusion: smaller h, smaller node capacity
    CHECK(discrete_node_capacity(1.0 / 64, 3) < discrete_node_capacity(1.0 / 32, 3));
    CHECK(discrete_node_capacity(1.0 / 128, 3) < discrete_node_capacity(1.0 / 64, 3));
  }
  SUBCASE("n=2: value * |log h| constant within 15%") {
    const double c1 = discrete_node_capacity(1.0 / 32, 2) * std::log(32.0);
    const double c2 = discrete_node_capacity(1.0 / 64, 2) * std::log(64.0);
    const double c3 = discrete_node_capacity(1.0 / 128, 2) * std::log(128.0);
    CHECK(std::abs(c1 - c2) / c2 < 0.15);
    CHECK(std::abs(c2 - c3) / c3 < 0.15);
  }
}

TEST_CASE("equivalent cube half-width reproduces the target capacity") {
  // Size a cube to match a ball of radius a, then measure it: capacities
  // should agree within a few percent.
  const double a = 0.25;
  const double w3 = equivalent_cube_half_width(a, 3);
  CHECK(w3 < a); // cubes have larger capacity radius than their half-width
  const double cap_cube = cap_variational(ShapeSpec::box({w3, w3, w3}), 3, 2.0, 1.0 / 20).value;
  CHECK(cap_cube == doctest::Approx(cap_ball(a, 3)).epsilon(0.06));

  const double w2 = equivalent_cube_half_width(0.1, 2);
  const double cap_sq = cap_variational(ShapeSpec::box({w2, w2, 0}), 2, 1.0, 1.0 / 128).value;
  CHECK(cap_sq == doctest::Approx(cap_ball(0.1, 2)).epsilon(0.06));
}
