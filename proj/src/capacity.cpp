#include "perfhom/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>

namespace perfhom {

namespace {

struct EquilibriumSolve {
  ScalarField phi;
  double cap = 0;
  double residual = 0;
  double box_radius = 0;
};

// Shared builder: cube [-R, R]^n, shape nodes pinned to 1. For n = 3 the
// outer boundary carries 0 on the first pass and the measured monopole
// gamma*h(x) afterwards; for n = 2 the domain is the unit disk B_1 (nodes
// outside pinned to 0) and box_radius is ignored.
EquilibriumSolve solve_equilibrium(const ShapeSpec& shape, int n, double box_radius, double h,
                                   const CapParams& params) {
  if (n != 2 && n != 3) throw std::invalid_argument("capacity: n must be 2 or 3");
  const double R = n == 2 ? 1.0 : box_radius;
  if (n == 3) {
    if (!(box_radius > 0)) throw std::invalid_argument("capacity: box_radius must be positive");
    if (shape.bounding_radius(n) * 3 > box_radius)
      throw std::invalid_argument("capacity: shape must fit the box with margin >= its diameter");
  } else {
    if (shape.bounding_radius(n) * 3 > 1.0)
      throw std::invalid_argument("capacity: shape must fit inside B_1 with margin");
  }
  if (!(h > 0) || h > R / 4) throw std::invalid_argument("capacity: invalid grid spacing");

  const int cells = std::max(4, int(std::lround(2 * R / h)));
  const int N = cells + 1;
  GridSpec g = GridSpec::make(n, {-R, -R, n == 3 ? -R : 0.0}, {2 * R, 2 * R, n == 3 ? 2 * R : 0.0},
                              {N, N, n == 3 ? N : 1});

  EquilibriumSolve out;
  out.box_radius = R;
  out.phi = ScalarField::zeros(g);
  ScalarField& phi = out.phi;

  if (n == 2) {
    // Unit-disk domain: pin nodes outside B_1 to zero.
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      const Vec3 p = g.node_pos(idx);
      if (p[0] * p[0] + p[1] * p[1] >= 1.0 - 1e-12) phi.set_dirichlet(idx, 0.0);
    }
  }

  const NodeSet shape_nodes = rasterize_shape(shape, {0, 0, 0}, g);
  for (std::int64_t idx : shape_nodes.members) phi.set_dirichlet(idx, 1.0);

  const std::vector<double> rhs(size_t(g.num_nodes()), 0.0);
  const double shell = R / 2;
  const int passes = n == 3 ? std::max(1, params.bc_passes) : 1;
  for (int pass = 0; pass < passes; ++pass) {
    if (pass > 0) {
      // Monopole-matched far field removes the O(shape/box) truncation bias.
      for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
        if (!g.on_outer_boundary(idx)) continue;
        const Vec3 p = g.node_pos(idx);
        const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        phi.values[size_t(idx)] = out.cap * fundamental_solution(rho, n);
      }
    }
    const LinearSolveStats stats = solve_poisson(phi, rhs, params.lin);
    out.residual = stats.residual;
    out.cap = shell_flux(phi, {0, 0, 0}, shell);
  }
  return out;
}

double cached_lookup(std::map<std::pair<int, std::uint64_t>, double>& cache, int n, double key_val,
                     const std::function<double()>& compute) {
  static std::mutex mu;
  std::uint64_t bits;
  static_assert(sizeof bits == sizeof key_val);
  std::memcpy(&bits, &key_val, sizeof bits);
  const std::pair<int, std::uint64_t> key{n, bits};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const double v = compute();
  cache.emplace(key, v);
  return v;
}

} // namespace

double fundamental_solution(double rho, int n) {
  if (!(rho > 0)) throw std::invalid_argument("fundamental_solution: need |x| > 0");
  if (n == 2) return -std::log(rho) / (2.0 * M_PI);
  if (n == 3) return 1.0 / (4.0 * M_PI * rho);
  throw std::invalid_argument("fundamental_solution: n must be 2 or 3");
}

double cap_ball(double r, int n) {
  if (n == 3) {
    if (r < 0) throw std::invalid_argument("cap_ball: r must be >= 0");
    return 4.0 * M_PI * r; // n(n-2) omega_n r^(n-2) with omega_3 = 4pi/3
  }
  if (n == 2) {
    if (r == 0) return 0;
    if (!(r > 0) || r >= 1)
      throw std::invalid_argument("cap_ball: n=2 capacity is relative to B_1, need 0 < r < 1");
    return -2.0 * M_PI / std::log(r);
  }
  throw std::invalid_argument("cap_ball: n must be 2 or 3");
}

double shell_flux(const ScalarField& phi, const Vec3& center, double shell_radius) {
  const GridSpec& g = phi.spec;
  const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
  const std::int64_t strides[3] = {1, nx, std::int64_t(nx) * ny};
  auto inside = [&](int i, int j, int k) {
    double m = std::abs(g.pos(0, i) - center[0]);
    m = std::max(m, std::abs(g.pos(1, j) - center[1]));
    if (g.dim == 3) m = std::max(m, std::abs(g.pos(2, k) - center[2]));
    return m <= shell_radius + 1e-12;
  };
  const double face_weight = g.dim == 3 ? g.h : 1.0;
  double flux = 0;
  for (int a = 0; a < g.dim; ++a) {
    const std::int64_t s = strides[a];
    const int lim[3] = {a == 0 ? nx - 1 : nx, a == 1 ? ny - 1 : ny, a == 2 ? nz - 1 : nz};
    for (int k = 0; k < lim[2]; ++k)
      for (int j = 0; j < lim[1]; ++j)
        for (int i = 0; i < lim[0]; ++i) {
          const bool in_lo = inside(i, j, k);
          const bool in_hi = inside(i + (a == 0), j + (a == 1), k + (a == 2));
          if (in_lo == in_hi) continue;
          const std::int64_t idx = g.index(i, j, k);
          const double d = phi.values[size_t(idx)] - phi.values[size_t(idx + s)];
          flux += face_weight * (in_lo ? d : -d);
        }
  }
  return flux;
}

CapacityResult cap_variational(const ShapeSpec& shape, int n, double box_radius, double h,
                               const CapParams& params) {
  CapacityResult res;
  res.method = CapacityResult::Method::variational;
  res.resolution = h;
  if (shape.is_empty(n)) return res;
  const EquilibriumSolve sol = solve_equilibrium(shape, n, box_radius, h, params);
  res.value = sol.cap;
  res.residual = sol.residual;
  res.resolution = sol.phi.spec.h;
  return res;
}

ScalarField equilibrium_potential(const ShapeSpec& shape, int n, double box_radius, double h,
                                  CapacityResult* cap_out, const CapParams& params) {
  if (n != 3)
    throw std::invalid_argument("equilibrium_potential: defined for n = 3 only");
  if (shape.is_empty(n))
    throw std::invalid_argument("equilibrium_potential: shape must be nonempty");
  EquilibriumSolve sol = solve_equilibrium(shape, n, box_radius, h, params);
  if (cap_out) {
    cap_out->value = sol.cap;
    cap_out->method = CapacityResult::Method::variational;
    cap_out->resolution = sol.phi.spec.h;
    cap_out->residual = sol.residual;
  }
  return std::move(sol.phi);
}

FarfieldProfile farfield_check(const ScalarField& phi, double gamma, double M) {
  const GridSpec& g = phi.spec;
  if (g.dim != 3)
    throw std::invalid_argument("farfield_check: far-field equivalence is n = 3 only");
  if (!(gamma > 0)) throw std::invalid_argument("farfield_check: gamma must be positive");

  const Vec3 center{g.origin[0] + 0.5 * g.extent[0], g.origin[1] + 0.5 * g.extent[1],
                    g.origin[2] + 0.5 * g.extent[2]};
  const double box_half = 0.5 * g.extent[0];

  FarfieldProfile prof;
  for (double rho = 2 * M; rho <= 0.85 * box_half; rho *= std::sqrt(2.0))
    prof.rho.push_back(rho);
  if (prof.rho.empty()) prof.rho.push_back(2 * M);

  // Deterministic quasi-uniform directions (Fibonacci sphere).
  const int ndir = 512;
  std::vector<Vec3> dirs(ndir);
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < ndir; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / ndir;
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    dirs[i] = {rxy * std::cos(ga * i), rxy * std::sin(ga * i), z};
  }

  auto interp = [&](const Vec3& x) {
    double fi[3];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
      const double t = (x[a] - g.origin[a]) / g.h;
      i0[a] = std::min(std::max(int(std::floor(t)), 0), g.nodes[a] - 2);
      fi[a] = std::min(std::max(t - i0[a], 0.0), 1.0);
    }
    double v = 0;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
          const double w = (di ? fi[0] : 1 - fi[0]) * (dj ? fi[1] : 1 - fi[1]) *
                           (dk ? fi[2] : 1 - fi[2]);
          v += w * phi.values[size_t(g.index(i0[0] + di, i0[1] + dj, i0[2] + dk))];
        }
    return v;
  };

  for (double rho : prof.rho) {
    if (rho > 0.5 * box_half + 1e-12) prof.truncation_warning = true;
    const double hval = gamma * fundamental_solution(rho, 3);
    double dev = 0;
    for (const Vec3& d : dirs) {
      const Vec3 x{center[0] + rho * d[0], center[1] + rho * d[1], center[2] + rho * d[2]};
      bool in = true;
      for (int a = 0; a < 3; ++a)
        if (x[a] < g.origin[a] || x[a] > g.origin[a] + g.extent[a]) in = false;
      if (!in) continue;
      dev = std::max(dev, std::abs(interp(x) / hval - 1.0));
    }
    prof.deviation.push_back(dev);
  }

  // Least-squares slope of log(dev) vs log(rho).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < prof.rho.size(); ++i) {
    if (prof.deviation[i] <= 0) continue;
    const double lx = std::log(prof.rho[i]), ly = std::log(prof.deviation[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++cnt;
  }
  if (cnt >= 2) prof.decay_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return prof;
}

double discrete_node_capacity(double h, int n) {
  static std::map<std::pair<int, std::uint64_t>, double> cache;
  return cached_lookup(cache, n, h, [&]() {
    const ShapeSpec point = ShapeSpec::ball(h * 0.25); // collapses to one node
    if (n == 3) {
      const double R = 48 * h;
      return cap_variational(point, 3, R, h).value;
    }
    return cap_variational(point, 2, 1.0, h).value;
  });
}

double discrete_node_capacity(const GridSpec& spec, int n) {
  return discrete_node_capacity(spec.h, n);
}

double equivalent_cube_half_width(double a, int n) {
  if (!(a > 0)) return 0;
  static std::map<std::pair<int, std::uint64_t>, double> cache;
  const double kappa = cached_lookup(cache, n, 1.0, [&]() {
    if (n == 3) {
      // Capacity radius per unit half-width of a cube.
      const double cap = cap_variational(ShapeSpec::box({1, 1, 1}), 3, 12.0, 1.0 / 8.0).value;
      return cap / (4.0 * M_PI);
    }
    // Logarithmic capacity radius per unit half-width of a square.
    const double w0 = 0.05;
    const double cap = cap_variational(ShapeSpec::box({w0, w0, 0}), 2, 1.0, 1.0 / 256.0).value;
    return std::exp(-2.0 * M_PI / cap) / w0;
  });
  return a / kappa;
}

} // namespace perfhom
