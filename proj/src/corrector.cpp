#include "perfhom/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perfhom {

CorrectorRun solve_corrector(double eps, double alpha0, const HoleField& holes,
                             const GridSpec& spec, const LinearSolveOptions& lin) {
  if (!holes.t_eps.spec.same_geometry(spec) && !holes.t_eps.members.empty())
    throw std::invalid_argument("solve_corrector: holes rasterized on a different grid");

  CorrectorRun run;
  run.eps = eps;
  run.alpha0 = alpha0;
  run.holes = holes;
  run.w = ScalarField::zeros(spec);
  for (std::int64_t idx : holes.t_eps.members) run.w.set_dirichlet(idx, 1.0);

  // lap w = alpha0  <=>  -lap w = -alpha0.
  const std::vector<double> rhs(size_t(spec.num_nodes()), -alpha0);
  const LinearSolveStats stats = solve_poisson(run.w, rhs, lin);
  run.boundary_flux_ok = stats.converged && stats.residual <= lin.tol;

  run.l2 = lp_norm(run.w, 2.0);
  for (double p : {1.0, 2.0, 4.0}) run.lp.emplace_back(p, lp_norm(run.w, p));
  run.h1_semi = std::sqrt(2.0 * dirichlet_energy(run.w));
  return run;
}

ScalarField solve_free_corrector(double eps, double alpha0, const GammaField& gamma,
                                 const GridSpec& spec, const LinearSolveOptions& lin) {
  const int n = spec.dim;
  if (gamma.config.dim != n)
    throw std::invalid_argument("solve_free_corrector: gamma dimension mismatch");
  ScalarField w0 = ScalarField::zeros(spec);
  std::vector<double> rhs(size_t(spec.num_nodes()), -alpha0);

  const double epsn = std::pow(eps, n);
  const double load_scale = 1.0 / spec.cell_volume();
  Index3 klo{0, 0, 0}, khi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    klo[a] = int(std::floor(spec.origin[a] / eps)) + 1;
    khi[a] = int(std::ceil((spec.origin[a] + spec.extent[a]) / eps)) - 1;
  }
  for (int kz = (n == 3 ? klo[2] : 0); kz <= (n == 3 ? khi[2] : 0); ++kz)
    for (int ky = klo[1]; ky <= khi[1]; ++ky)
      for (int kx = klo[0]; kx <= khi[0]; ++kx) {
        const Index3 k{kx, ky, kz};
        if (!gamma.window.contains(k))
          throw std::invalid_argument("solve_free_corrector: gamma window too small");
        const double gk = gamma.at(k);
        if (gk == 0) continue;
        Index3 node{0, 0, 0};
        for (int a = 0; a < n; ++a) {
          const double t = (eps * k[a] - spec.origin[a]) / spec.h;
          node[a] = int(std::lround(t));
          if (std::abs(t - node[a]) > 1e-9)
            throw std::invalid_argument("solve_free_corrector: lattice point eps*k off-grid");
        }
        const std::int64_t idx = spec.index(node[0], node[1], node[2]);
        if (w0.mask[size_t(idx)] == 0) rhs[size_t(idx)] += epsn * gk * load_scale;
      }

  solve_poisson(w0, rhs, lin);
  return w0;
}

NormScaling norm_scaling(const std::vector<CorrectorRun>& runs, double p) {
  if (runs.size() < 3)
    throw std::invalid_argument("norm_scaling: need at least 3 eps values");
  NormScaling ns;
  for (const auto& run : runs) {
    double norm = 0;
    bool found = false;
    for (const auto& [pp, v] : run.lp)
      if (pp == p) { norm = v; found = true; }
    if (!found) norm = lp_norm(run.w, p);
    ns.eps_norm.emplace_back(run.eps, norm);
    const double denom = run.eps * run.eps * std::abs(std::log(run.eps));
    ns.log_ratio.push_back(denom > 0 ? norm / denom : 0.0);
    if (norm <= 0) ns.degenerate = true;
  }
  if (ns.degenerate) return ns;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = double(ns.eps_norm.size());
  for (const auto& [e, nv] : ns.eps_norm) {
    const double lx = std::log(e), ly = std::log(nv);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  ns.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return ns;
}

std::pair<double, double> gradient_concentration(const CorrectorRun& run,
                                                 const ScalarField& phi) {
  const GridSpec& g = run.w.spec;
  if (!phi.spec.same_geometry(g))
    throw std::invalid_argument("gradient_concentration: phi on a different grid");
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx)
    if (g.on_outer_boundary(idx) && std::abs(phi.values[size_t(idx)]) > 1e-12)
      throw std::invalid_argument("gradient_concentration: phi must vanish on the boundary");

  const int nx = g.nodes[0], ny = g.nodes[1], nz = g.nodes[2];
  const std::int64_t strides[3] = {1, nx, std::int64_t(nx) * ny};
  const double face_weight = g.dim == 3 ? g.h : 1.0;
  double energy_phi = 0;
  for (int a = 0; a < g.dim; ++a) {
    const std::int64_t s = strides[a];
    const int lim[3] = {a == 0 ? nx - 1 : nx, a == 1 ? ny - 1 : ny, a == 2 ? nz - 1 : nz};
    for (int k = 0; k < lim[2]; ++k)
      for (int j = 0; j < lim[1]; ++j) {
        std::int64_t idx = g.index(0, j, k);
        for (int i = 0; i < lim[0]; ++i, ++idx) {
          const double d = run.w.values[size_t(idx + s)] - run.w.values[size_t(idx)];
          const double pavg = 0.5 * (phi.values[size_t(idx + s)] + phi.values[size_t(idx)]);
          energy_phi += face_weight * d * d * pavg;
        }
      }
  }
  double int_phi = 0;
  for (double v : phi.values) int_phi += v;
  int_phi *= g.cell_volume();
  return {energy_phi, run.alpha0 * int_phi};
}

H1Bound h1_bound_check(const std::vector<CorrectorRun>& runs) {
  if (runs.size() < 2)
    throw std::invalid_argument("h1_bound_check: need at least 2 runs");
  H1Bound b;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    b.max_h1 = std::max(b.max_h1, run.h1_semi);
    lo = std::min(lo, run.h1_semi);
  }
  b.ratio = lo > 0 ? b.max_h1 / lo : 0.0;
  return b;
}

} // namespace perfhom
