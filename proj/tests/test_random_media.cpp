#include <doctest.h>

#include <cmath>
#include <string>

#include "perfhom/random_media.hpp"

using namespace perfhom;

namespace {

MediumConfig constant_medium(int dim, double gamma) {
  MediumConfig c;
  c.dim = dim;
  c.law = MediumLaw::constant;
  c.gamma = gamma;
  c.gamma_bar = std::max(gamma, 1.0);
  return c;
}

LatticeBox box2(int lo, int hi) {
  LatticeBox b;
  b.dim = 2;
  b.lo = {lo, lo, 0};
  b.hi = {hi, hi, 1};
  return b;
}

} // namespace

TEST_CASE("gamma laws: constant, dilution, iid moments") {
  const GammaField c = sample_gamma_field(constant_medium(2, 2.0), 7, box2(0, 16));
  for (double v : c.values) CHECK(v == 2.0);

  MediumConfig dil = constant_medium(2, 3.0);
  dil.law = MediumLaw::bernoulli_dilution;
  dil.p_empty = 1.0;
  const GammaField z = sample_gamma_field(dil, 7, box2(0, 16));
  for (double v : z.values) CHECK(v == 0.0);

  MediumConfig iid;
  iid.dim = 2;
  iid.law = MediumLaw::iid_uniform;
  iid.gamma_lo = 0.0;
  iid.gamma_hi = 4.0;
  iid.gamma_bar = 4.0;
  const GammaField f = sample_gamma_field(iid, 123, box2(0, 100)); // 10^4 sites
  double mean = 0, vmax = 0;
  for (double v : f.values) {
    mean += v;
    vmax = std::max(vmax, v);
    CHECK(v >= 0.0);
    CHECK(v <= 4.0);
  }
  mean /= double(f.values.size());
  // Law of large numbers with analytic moments: sigma = (hi-lo)/sqrt(12).
  const double sigma = 4.0 / std::sqrt(12.0);
  CHECK(std::abs(mean - 2.0) <= 3.0 * sigma / 100.0);
  CHECK(vmax <= iid.gamma_bar);
}

TEST_CASE("boundedness: sampled gamma never exceeds gamma_bar") {
  MediumConfig ma;
  ma.dim = 2;
  ma.law = MediumLaw::moving_average;
  ma.ma_range = 2;
  ma.gamma_lo = 0.0;
  ma.gamma_hi = 5.0;
  ma.gamma_bar = 4.0; // clamp hits
  const GammaField f = sample_gamma_field(ma, 99, box2(0, 100));
  for (double v : f.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 4.0);
  }

  MediumConfig sp;
  sp.dim = 2;
  sp.law = MediumLaw::shifted_periodic;
  sp.period = 2;
  sp.pattern = {1.0, 3.0, 3.0, 1.0};
  sp.gamma_bar = 3.0;
  const GammaField g = sample_gamma_field(sp, 5, box2(-8, 8));
  for (double v : g.values) CHECK(v <= 3.0);
}

TEST_CASE("reproducibility and window consistency") {
  MediumConfig iid;
  iid.dim = 3;
  iid.law = MediumLaw::iid_uniform;
  iid.gamma_lo = 1.0;
  iid.gamma_hi = 2.0;
  iid.gamma_bar = 2.0;
  LatticeBox big;
  big.dim = 3;
  big.lo = {-4, -4, -4};
  big.hi = {4, 4, 4};
  const GammaField a = sample_gamma_field(iid, 2024, big);
  const GammaField b = sample_gamma_field(iid, 2024, big);
  CHECK(a.values == b.values); // bit identical

  LatticeBox small;
  small.dim = 3;
  small.lo = {0, -2, 1};
  small.hi = {3, 2, 4};
  const GammaField s = sample_gamma_field(iid, 2024, small);
  for (int kz = small.lo[2]; kz < small.hi[2]; ++kz)
    for (int ky = small.lo[1]; ky < small.hi[1]; ++ky)
      for (int kx = small.lo[0]; kx < small.hi[0]; ++kx) {
        const Index3 k{kx, ky, kz};
        CHECK(s.at(k) == a.at(k)); // overlapping windows agree exactly
      }
}

TEST_CASE("shift consistency is exact for every law") {
  SUBCASE("identity shift") {
    const GammaField c = sample_gamma_field(constant_medium(2, 1.5), 1, box2(0, 8));
    CHECK(shift_consistency(c, {0, 0, 0}));
  }
  SUBCASE("iid, shift (5,0) on a 32^2 window") {
    MediumConfig iid;
    iid.dim = 2;
    iid.law = MediumLaw::iid_uniform;
    iid.gamma_lo = 0.0;
    iid.gamma_hi = 1.0;
    iid.gamma_bar = 1.0;
    const GammaField f = sample_gamma_field(iid, 77, box2(0, 32));
    CHECK(shift_consistency(f, {5, 0, 0}));
    CHECK(shift_consistency(f, {-3, 11, 0}));
  }
  SUBCASE("shifted_periodic with random phase, any shift") {
    MediumConfig sp;
    sp.dim = 2;
    sp.law = MediumLaw::shifted_periodic;
    sp.period = 3;
    sp.pattern = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    sp.gamma_bar = 8.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const GammaField f = sample_gamma_field(sp, seed, box2(0, 12));
      CHECK(shift_consistency(f, {1, 2, 0}));
      CHECK(shift_consistency(f, {7, -4, 0}));
    }
  }
  SUBCASE("moving average") {
    MediumConfig ma;
    ma.dim = 2;
    ma.law = MediumLaw::moving_average;
    ma.ma_range = 1;
    ma.gamma_lo = 0.0;
    ma.gamma_hi = 2.0;
    ma.gamma_bar = 2.0;
    const GammaField f = sample_gamma_field(ma, 13, box2(0, 16));
    CHECK(shift_consistency(f, {2, -1, 0}));
  }
}

TEST_CASE("ergodic self-averaging: block-mean variance decays like t^-n") {
  MediumConfig iid;
  iid.dim = 2;
  iid.law = MediumLaw::iid_uniform;
  iid.gamma_lo = 0.0;
  iid.gamma_hi = 1.0;
  iid.gamma_bar = 1.0;

  auto block_mean_var = [&](int t, int nblocks) {
    double s1 = 0, s2 = 0;
    for (int b = 0; b < nblocks; ++b) {
      LatticeBox box;
      box.dim = 2;
      box.lo = {b * t, 0, 0};
      box.hi = {(b + 1) * t, t, 1};
      const GammaField f = sample_gamma_field(iid, 4242, box);
      double m = 0;
      for (double v : f.values) m += v;
      m /= double(f.values.size());
      s1 += m;
      s2 += m * m;
    }
    const double mean = s1 / nblocks;
    return s2 / nblocks - mean * mean;
  };
  const double v8 = block_mean_var(8, 200);
  const double v16 = block_mean_var(16, 200);
  // iid: block-mean variance ratio should be ~ 2^n = 4, within a factor 3.
  const double ratio = v8 / v16;
  CHECK(ratio > 4.0 / 3.0);
  CHECK(ratio < 4.0 * 3.0);
}

TEST_CASE("radius_from_gamma and hole_radius_eps closed forms") {
  CHECK(radius_from_gamma(4 * M_PI, 3) == doctest::Approx(1.0));
  CHECK(radius_from_gamma(2 * M_PI, 2) == doctest::Approx(1.0));
  CHECK(radius_from_gamma(0.0, 3) == 0.0);
  CHECK_THROWS(radius_from_gamma(-1.0, 3));
  CHECK_THROWS(radius_from_gamma(1.0, 4));

  CHECK(hole_radius_eps(1.0, 0.25, 3) == doctest::Approx(1.0 / 64));
  CHECK(hole_radius_eps(1.0, 0.5, 2) == doctest::Approx(std::exp(-4.0)));
  CHECK(hole_radius_eps(1.0, 1.0, 3) == doctest::Approx(1.0));
  CHECK(hole_radius_eps(0.0, 0.5, 2) == 0.0);
}

TEST_CASE("build_holes: empty medium, resolved disks, point mode") {
  SUBCASE("gamma = 0 gives no holes") {
    const GridSpec g = GridSpec::unit_cube(2, 65);
    const GammaField z = sample_gamma_field(constant_medium(2, 0.0), 1, box2(-1, 4));
    const HoleField hf = build_holes(z, 0.5, g, HoleMode::automatic);
    CHECK(hf.num_holes() == 0);
    CHECK(hf.t_eps.empty());
  }
  SUBCASE("n=2 resolved disks match the distance enumeration oracle") {
    const GridSpec g = GridSpec::unit_cube(2, 257); // h = 1/256
    const GammaField c = sample_gamma_field(constant_medium(2, 2 * M_PI), 1, box2(-1, 4));
    const HoleField hf = build_holes(c, 0.5, g, HoleMode::resolved);
    const double a = std::exp(-4.0);
    CHECK(a / g.h == doctest::Approx(4.69).epsilon(0.01)); // ~4.7 cells
    REQUIRE(hf.num_holes() == 9); // eps k in [0,1]^2: k in {0,1,2}^2
    for (const auto& [k, nodes] : hf.holes) {
      const Vec3 center{0.5 * k[0], 0.5 * k[1], 0};
      std::vector<std::int64_t> oracle;
      for (std::int64_t i = 0; i < g.num_nodes(); ++i) {
        const Vec3 p = g.node_pos(i);
        const double d2 =
            (p[0] - center[0]) * (p[0] - center[0]) + (p[1] - center[1]) * (p[1] - center[1]);
        if (d2 <= a * a * (1 + 1e-12)) oracle.push_back(i);
      }
      CHECK(nodes.members == oracle);
    }
  }
  SUBCASE("n=3 point mode: 27 interior lattice holes with positive calibration") {
    const GridSpec g = GridSpec::unit_cube(3, 17); // h = 1/16 = eps/4
    MediumConfig c3 = constant_medium(3, 4 * M_PI);
    c3.gamma_bar = 4 * M_PI;
    LatticeBox b;
    b.dim = 3;
    b.lo = {-1, -1, -1};
    b.hi = {6, 6, 6};
    const GammaField c = sample_gamma_field(c3, 1, b);
    const HoleField hf = build_holes(c, 0.25, g, HoleMode::point);
    // Lattice-point counting oracle: eps k in [0,1]^3 means k in {0..4}^3, of
    // which {1,2,3}^3 = 27 are interior.
    std::size_t interior_holes = 0;
    for (const auto& [k, nodes] : hf.holes) {
      REQUIRE(nodes.size() == 1);
      bool interior = true;
      for (int a = 0; a < 3; ++a)
        if (k[a] == 0 || k[a] == 4) interior = false;
      if (interior) ++interior_holes;
    }
    CHECK(interior_holes == 27);
    REQUIRE(!hf.calibrated_gamma.empty());
    for (const auto& [k, cap] : hf.calibrated_gamma) CHECK(cap > 0.0);
  }
  SUBCASE("resolved mode rejects sub-grid holes") {
    const GridSpec g = GridSpec::unit_cube(2, 65);
    const GammaField c = sample_gamma_field(constant_medium(2, 2 * M_PI), 1, box2(-2, 5));
    CHECK_THROWS_AS(build_holes(c, 1.0 / 3, g, HoleMode::resolved), HoleError);
  }
  SUBCASE("grid must resolve the lattice spacing") {
    const GridSpec g = GridSpec::unit_cube(2, 9);
    const GammaField c = sample_gamma_field(constant_medium(2, 2 * M_PI), 1, box2(-1, 6));
    CHECK_THROWS_AS(build_holes(c, 0.25, g, HoleMode::automatic), HoleError);
  }
  SUBCASE("Assumption-1 envelope violation is an error") {
    MediumConfig c2 = constant_medium(2, 2 * M_PI); // r = 1
    c2.envelope_M = 2.0;                            // n=2 needs r <= 1/M = 0.5
    const GridSpec g = GridSpec::unit_cube(2, 257);
    const GammaField c = sample_gamma_field(c2, 1, box2(-1, 4));
    CHECK_THROWS_AS(build_holes(c, 0.5, g, HoleMode::automatic), HoleError);
  }
}

TEST_CASE("config validation names the offending field") {
  MediumConfig bad;
  bad.dim = 2;
  bad.law = MediumLaw::iid_uniform;
  bad.gamma_lo = 0.0;
  bad.gamma_hi = 9.0;
  bad.gamma_bar = 4.0;
  try {
    bad.validate();
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
}
