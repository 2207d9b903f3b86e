#include <doctest.h>

#include <cmath>

#include "perfhom/linsolve.hpp"

using namespace perfhom;

TEST_CASE("poisson solve against a manufactured solution") {
  for (int dim : {2, 3}) {
    const int nodes = dim == 2 ? 65 : 33;
    const GridSpec g = GridSpec::unit_cube(dim, nodes);
    // u* = prod sin(pi x_a), -lap u* = dim pi^2 u*.
    ScalarField exact = ScalarField::zeros(g);
    std::vector<double> rhs(size_t(g.num_nodes()), 0.0);
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const Vec3 p = g.node_pos(i);
      double v = 1;
      for (int a = 0; a < dim; ++a) v *= std::sin(M_PI * p[a]);
      exact.values[size_t(i)] = v;
      rhs[size_t(i)] = dim * M_PI * M_PI * v;
    }
    ScalarField u = ScalarField::zeros(g);
    const LinearSolveStats stats = solve_poisson(u, rhs);
    CHECK(stats.converged);
    CHECK(stats.residual <= 1e-10);
    double err = 0;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i)
      err = std::max(err, std::abs(u.values[size_t(i)] - exact.values[size_t(i)]));
    // O(h^2) consistency.
    CHECK(err < 2.0 * g.h * g.h);
  }
}

TEST_CASE("poisson solve respects interior Dirichlet holes") {
  const GridSpec g = GridSpec::unit_cube(2, 65);
  ScalarField u = ScalarField::zeros(g);
  const NodeSet hole = rasterize_shape(ShapeSpec::ball(0.12), {0.5, 0.5, 0}, g);
  for (std::int64_t idx : hole.members) u.set_dirichlet(idx, 1.0);
  const std::vector<double> rhs(size_t(g.num_nodes()), 0.0);
  solve_poisson(u, rhs);
  for (std::int64_t idx : hole.members) CHECK(u.values[size_t(idx)] == 1.0);
  // Harmonic between the hole and the boundary: values in (0, 1).
  double lo = 1, hi = 0;
  for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
    if (u.mask[size_t(i)] != 0) continue;
    lo = std::min(lo, u.values[size_t(i)]);
    hi = std::max(hi, u.values[size_t(i)]);
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0 + 1e-12);
  CHECK(hi > 0.5); // near the hole
}

TEST_CASE("plain SOR fallback matches multigrid") {
  const GridSpec g = GridSpec::unit_cube(2, 33);
  std::vector<double> rhs(size_t(g.num_nodes()), 1.0);
  ScalarField a = ScalarField::zeros(g);
  ScalarField b = ScalarField::zeros(g);
  LinearSolveOptions mg_opt;
  LinearSolveOptions sor_opt;
  sor_opt.multigrid = false;
  solve_poisson(a, rhs, mg_opt);
  solve_poisson(b, rhs, sor_opt);
  for (std::int64_t i = 0; i < g.num_nodes(); ++i)
    CHECK(a.values[size_t(i)] == doctest::Approx(b.values[size_t(i)]).epsilon(1e-7));
}

TEST_CASE("point loads keep their mass through the hierarchy") {
  // -lap u = delta-load: flux balance determines the solution scale; the
  // nested start must not diverge or lose the spike.
  const GridSpec g = GridSpec::unit_cube(2, 129);
  std::vector<double> rhs(size_t(g.num_nodes()), 0.0);
  const std::int64_t c = g.index(64, 64);
  rhs[size_t(c)] = 1.0 / g.cell_volume();
  ScalarField u = ScalarField::zeros(g);
  const LinearSolveStats stats = solve_poisson(u, rhs);
  CHECK(stats.converged);
  CHECK(u.values[size_t(c)] > 0);
  // Total discrete flux through the boundary equals the load mass (= 1).
  const ScalarField lap = laplacian_apply(u);
  double mass = 0;
  for (std::int64_t i = 0; i < g.num_nodes(); ++i)
    if (u.mask[size_t(i)] == 0) mass += -lap.values[size_t(i)] * g.cell_volume();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}
