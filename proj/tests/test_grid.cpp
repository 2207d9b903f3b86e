#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <random>

#include "perfhom/grid.hpp"
#include "perfhom/io.hpp"

using namespace perfhom;

namespace {

// Fills interior nodes (and optionally the boundary) with reproducible noise.
ScalarField random_field(const GridSpec& g, unsigned seed, bool zero_boundary) {
  ScalarField u = ScalarField::zeros(g);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
    if (zero_boundary && u.mask[size_t(i)] != 0) continue;
    u.values[size_t(i)] = dist(rng);
  }
  return u;
}

// Dense graph-Laplacian oracle: 1/2 u^T A u with A assembled from all
// nearest-neighbor pairs weighted h^(n-2).
double energy_matrix_oracle(const ScalarField& u) {
  const GridSpec& g = u.spec;
  const std::int64_t n = g.num_nodes();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const double w = g.dim == 3 ? g.h : 1.0;
  const std::int64_t strides[3] = {1, g.nodes[0], std::int64_t(g.nodes[0]) * g.nodes[1]};
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const Index3 c = g.coords(idx);
    for (int a = 0; a < g.dim; ++a) {
      if (c[a] + 1 >= g.nodes[a]) continue;
      const std::int64_t nb = idx + strides[a];
      A(idx, idx) += w;
      A(nb, nb) += w;
      A(idx, nb) -= w;
      A(nb, idx) -= w;
    }
  }
  Eigen::VectorXd v(n);
  for (std::int64_t i = 0; i < n; ++i) v(i) = u.values[size_t(i)];
  return 0.5 * v.dot(A * v);
}

} // namespace

TEST_CASE("GridSpec construction and validation") {
  const GridSpec g = GridSpec::unit_cube(2, 9);
  CHECK(g.h == doctest::Approx(1.0 / 8));
  CHECK(g.num_nodes() == 81);
  CHECK(g.pos(0, 8) == doctest::Approx(1.0));

  CHECK_THROWS(GridSpec::make(2, {0, 0, 0}, {1, 1, 0}, {3, 9, 1}));   // too small
  CHECK_THROWS(GridSpec::make(2, {0, 0, 0}, {1, 2, 0}, {9, 9, 1}));   // anisotropic
  CHECK_NOTHROW(GridSpec::make(2, {0, 0, 0}, {1, 2, 0}, {9, 17, 1})); // same h, ok

  const GridSpec w = GridSpec::window(3, 4, 6);
  CHECK(w.nodes[0] == 25);
  CHECK(w.h == doctest::Approx(1.0 / 6));
}

TEST_CASE("laplacian: constants and quadratics") {
  for (int dim : {2, 3}) {
    const GridSpec g = GridSpec::unit_cube(dim, dim == 2 ? 17 : 9);
    ScalarField u = ScalarField::zeros(g);

    for (auto& v : u.values) v = 3.25;
    ScalarField lap = laplacian_apply(u);
    for (std::int64_t i = 0; i < g.num_nodes(); ++i)
      if (u.mask[size_t(i)] == 0) CHECK(lap.values[size_t(i)] == doctest::Approx(0.0).epsilon(1e-12));

    // |x|^2 / 2n has laplacian exactly 1 on the stencil.
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const Vec3 p = g.node_pos(i);
      double s = 0;
      for (int a = 0; a < dim; ++a) s += p[a] * p[a];
      u.values[size_t(i)] = s / (2.0 * dim);
    }
    lap = laplacian_apply(u);
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      if (u.mask[size_t(i)] != 0) CHECK(lap.values[size_t(i)] == 0.0);
      else CHECK(lap.values[size_t(i)] == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("laplacian: fundamental-solution refinement study (n=3)") {
  // Sampled 1/(4pi|x|) away from the origin: |lap_h| <= C h^2 |x|^-5, so the
  // truncation error at a fixed point drops ~4x per mesh halving.
  auto worst = [](int nodes) {
    const GridSpec g = GridSpec::make(3, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {nodes, nodes, nodes});
    ScalarField u = ScalarField::zeros(g);
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const Vec3 p = g.node_pos(i);
      u.values[size_t(i)] = 1.0 / (4 * M_PI * std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    const ScalarField lap = laplacian_apply(u);
    double m = 0;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i)
      m = std::max(m, std::abs(lap.values[size_t(i)]));
    return m;
  };
  const double e1 = worst(9), e2 = worst(17), e3 = worst(33);
  CHECK(e1 / e2 > 3.0);
  CHECK(e2 / e3 > 3.0);
  // Analytic fourth-derivative oracle: sum of |d^4 h| along axes at |x| >= 0.5
  // is bounded by 30/(pi |x|^5); the h^2/12 truncation bound follows.
  const double h = 0.5 / 16;
  CHECK(e3 <= (h * h / 12.0) * (30.0 / M_PI) * std::pow(0.5, -5.0));
}

TEST_CASE("dirichlet_energy: ramp, matrix oracle, summation by parts") {
  const GridSpec g = GridSpec::unit_cube(2, 33);

  ScalarField ramp = ScalarField::zeros(g);
  for (std::int64_t i = 0; i < g.num_nodes(); ++i) ramp.values[size_t(i)] = g.node_pos(i)[0];
  // |grad| = 1 on the unit square: energy ~ 1/2 up to the O(h) face-count bias.
  CHECK(dirichlet_energy(ramp) == doctest::Approx(0.5).epsilon(2.0 / 32));

  ScalarField zero = ScalarField::zeros(g);
  CHECK(dirichlet_energy(zero) == 0.0);

  for (int dim : {2, 3}) {
    const GridSpec g8 = GridSpec::unit_cube(dim, 8);
    const ScalarField u = random_field(g8, 42 + unsigned(dim), false);
    CHECK(dirichlet_energy(u) == doctest::Approx(energy_matrix_oracle(u)).epsilon(1e-12));

    // Summation by parts, exact to rounding for zero-boundary fields.
    const ScalarField v = random_field(g8, 7 + unsigned(dim), true);
    const ScalarField lap = laplacian_apply(v);
    double sum = 0;
    for (std::int64_t i = 0; i < g8.num_nodes(); ++i)
      sum += v.values[size_t(i)] * lap.values[size_t(i)];
    sum *= g8.cell_volume();
    CHECK(dirichlet_energy(v) == doctest::Approx(-0.5 * sum).epsilon(1e-12));
    CHECK(sum <= 1e-12); // negative semidefinite
  }
}

TEST_CASE("laplacian symmetry on random fields") {
  for (int dim : {2, 3}) {
    const GridSpec g = GridSpec::unit_cube(dim, 8);
    const ScalarField u = random_field(g, 1, true);
    const ScalarField v = random_field(g, 2, true);
    const ScalarField lu = laplacian_apply(u);
    const ScalarField lv = laplacian_apply(v);
    double a = 0, b = 0;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      a += v.values[size_t(i)] * lu.values[size_t(i)];
      b += u.values[size_t(i)] * lv.values[size_t(i)];
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("lp_norm basics") {
  const GridSpec g = GridSpec::unit_cube(2, 65);
  ScalarField u = ScalarField::zeros(g);
  for (auto& v : u.values) v = 1.0;
  // Unit-volume domain: norm ~ 1 for every p (O(h) node-count bias).
  for (double p : {1.0, 2.0, 3.5}) CHECK(lp_norm(u, p) == doctest::Approx(1.0).epsilon(0.04));
  for (auto& v : u.values) v = -2.5;
  CHECK(lp_norm(u, 3.0) == doctest::Approx(2.5).epsilon(0.04));

  // Indicator of half the nodes at p = 2.
  for (std::int64_t i = 0; i < g.num_nodes(); ++i)
    u.values[size_t(i)] = g.node_pos(i)[0] < 0.5 ? 1.0 : 0.0;
  CHECK(lp_norm(u, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(0.04));

  CHECK_THROWS(lp_norm(u, 0.5));
}

TEST_CASE("rasterize_shape: balls, boxes, point fallback") {
  const GridSpec g = GridSpec::make(2, {0, 0, 0}, {1, 1, 0}, {11, 11, 1}); // h = 0.1
  const Vec3 center{0.45, 0.45, 0}; // mid-cell

  SUBCASE("radius zero is empty") {
    const NodeSet s = rasterize_shape(ShapeSpec::ball(0), center, g);
    CHECK(s.empty());
  }
  SUBCASE("ball nodes match the distance enumeration oracle") {
    const NodeSet s = rasterize_shape(ShapeSpec::ball(0.3), center, g);
    std::vector<std::int64_t> oracle;
    for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
      const Vec3 p = g.node_pos(i);
      const double d2 = (p[0] - center[0]) * (p[0] - center[0]) +
                        (p[1] - center[1]) * (p[1] - center[1]);
      if (d2 <= 0.3 * 0.3) oracle.push_back(i);
    }
    CHECK(s.members == oracle);
    s.validate();
  }
  SUBCASE("sub-grid ball collapses to the nearest node") {
    const NodeSet s = rasterize_shape(ShapeSpec::ball(0.01), center, g);
    REQUIRE(s.size() == 1);
    const Vec3 p = g.node_pos(s.members[0]);
    CHECK(std::abs(p[0] - center[0]) <= 0.5 * g.h + 1e-12);
    CHECK(std::abs(p[1] - center[1]) <= 0.5 * g.h + 1e-12);
  }
  SUBCASE("box rasterization") {
    const NodeSet s = rasterize_shape(ShapeSpec::box({0.15, 0.25, 0}), {0.5, 0.5, 0}, g);
    for (std::int64_t idx : s.members) {
      const Vec3 p = g.node_pos(idx);
      CHECK(std::abs(p[0] - 0.5) <= 0.15 + 1e-12);
      CHECK(std::abs(p[1] - 0.5) <= 0.25 + 1e-12);
    }
    CHECK(s.size() == 3 * 5);
  }
  SUBCASE("disjoint bounding box is rejected") {
    CHECK_THROWS(rasterize_shape(ShapeSpec::ball(0.05), {5.0, 5.0, 0}, g));
  }
}

TEST_CASE("field dump round-trip and CSV slice") {
  const GridSpec g = GridSpec::make(2, {-0.5, 0.25, 0}, {1, 1, 0}, {9, 9, 1});
  ScalarField u = ScalarField::zeros(g);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : u.values) v = dist(rng);

  const std::string path = "/tmp/perfhom_test_field.txt";
  dump_field(u, path);
  const ScalarField back = load_field(path);
  CHECK(back.spec.same_geometry(g));
  for (std::size_t i = 0; i < u.values.size(); ++i) CHECK(back.values[i] == u.values[i]);

  write_csv_slice(u, "/tmp/perfhom_test_slice.csv");
  std::ifstream in("/tmp/perfhom_test_slice.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,value");
}
