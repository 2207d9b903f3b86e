#include "perfhom/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perfhom {

namespace {

struct MgLevel {
  int dim = 2;
  int nx = 0, ny = 0, nz = 1;
  double h = 0;
  std::vector<std::uint8_t> mask;
  std::vector<double> u, f;

  std::int64_t size() const { return std::int64_t(nx) * ny * nz; }
  std::int64_t index(int i, int j, int k) const {
    return (std::int64_t(k) * ny + j) * nx + i;
  }
  bool coarsenable() const {
    bool ok = (nx - 1) % 2 == 0 && nx >= 7 && (ny - 1) % 2 == 0 && ny >= 7;
    if (dim == 3) ok = ok && (nz - 1) % 2 == 0 && nz >= 7;
    return ok;
  }
};

// Red-black Gauss-Seidel sweeps of -lap u = f.
void smooth(MgLevel& L, int sweeps) {
  const std::int64_t sx = 1, sy = L.nx, sz = std::int64_t(L.nx) * L.ny;
  const double h2 = L.h * L.h;
  const double inv_diag = 1.0 / (2.0 * L.dim);
  for (int s = 0; s < sweeps; ++s) {
    for (int color = 0; color < 2; ++color) {
      for (int k = 0; k < L.nz; ++k)
        for (int j = 0; j < L.ny; ++j) {
          const int istart = (j + k + color) % 2;
          std::int64_t idx = L.index(istart, j, k);
          for (int i = istart; i < L.nx; i += 2, idx += 2) {
            if (L.mask[size_t(idx)] != 0) continue;
            double sum = L.u[size_t(idx - sx)] + L.u[size_t(idx + sx)] +
                         L.u[size_t(idx - sy)] + L.u[size_t(idx + sy)];
            if (L.dim == 3) sum += L.u[size_t(idx - sz)] + L.u[size_t(idx + sz)];
            L.u[size_t(idx)] = (sum + h2 * L.f[size_t(idx)]) * inv_diag;
          }
        }
    }
  }
}

// r = f + lap(u) on interior, 0 elsewhere. Returns max-norm.
double residual(const MgLevel& L, std::vector<double>& r) {
  const std::int64_t sx = 1, sy = L.nx, sz = std::int64_t(L.nx) * L.ny;
  const double inv_h2 = 1.0 / (L.h * L.h);
  const double diag = 2.0 * L.dim;
  double rmax = 0.0;
  r.assign(size_t(L.size()), 0.0);
  for (int k = 0; k < L.nz; ++k)
    for (int j = 0; j < L.ny; ++j) {
      std::int64_t idx = L.index(0, j, k);
      for (int i = 0; i < L.nx; ++i, ++idx) {
        if (L.mask[size_t(idx)] != 0) continue;
        double sum = L.u[size_t(idx - sx)] + L.u[size_t(idx + sx)] +
                     L.u[size_t(idx - sy)] + L.u[size_t(idx + sy)];
        if (L.dim == 3) sum += L.u[size_t(idx - sz)] + L.u[size_t(idx + sz)];
        const double rv = L.f[size_t(idx)] + (sum - diag * L.u[size_t(idx)]) * inv_h2;
        r[size_t(idx)] = rv;
        rmax = std::max(rmax, std::abs(rv));
      }
    }
  return rmax;
}

MgLevel coarsen_geometry(const MgLevel& fine) {
  MgLevel c;
  c.dim = fine.dim;
  c.nx = (fine.nx - 1) / 2 + 1;
  c.ny = (fine.ny - 1) / 2 + 1;
  c.nz = fine.dim == 3 ? (fine.nz - 1) / 2 + 1 : 1;
  c.h = fine.h * 2;
  c.mask.assign(size_t(c.size()), 0);
  // Conservative coarsening: a coarse node is Dirichlet as soon as any fine
  // node in its restriction neighborhood is. Plain injection lets the coarse
  // correction push against staircase boundaries and can destabilize the
  // cycle on irregularly masked domains.
  for (int k = 0; k < c.nz; ++k)
    for (int j = 0; j < c.ny; ++j)
      for (int i = 0; i < c.nx; ++i) {
        const int fi = 2 * i, fj = 2 * j, fk = fine.dim == 3 ? 2 * k : 0;
        std::uint8_t m = 0;
        const int dzlo = fine.dim == 3 ? -1 : 0, dzhi = fine.dim == 3 ? 1 : 0;
        for (int dk = dzlo; dk <= dzhi && !m; ++dk)
          for (int dj = -1; dj <= 1 && !m; ++dj)
            for (int di = -1; di <= 1 && !m; ++di) {
              const int ii = fi + di, jj = fj + dj, kk = fk + dk;
              if (ii < 0 || ii >= fine.nx || jj < 0 || jj >= fine.ny) continue;
              if (fine.dim == 3 && (kk < 0 || kk >= fine.nz)) continue;
              if (fine.mask[size_t(fine.index(ii, jj, kk))] != 0) m = 1;
            }
        c.mask[size_t(c.index(i, j, k))] = m;
      }
  c.u.assign(size_t(c.size()), 0.0);
  c.f.assign(size_t(c.size()), 0.0);
  return c;
}

// Full weighting of the fine residual into the coarse rhs.
void restrict_residual(const MgLevel& fine, const std::vector<double>& r, MgLevel& coarse) {
  const int wdim = fine.dim;
  const double norm = wdim == 3 ? 8.0 : 4.0;
  for (int K = 0; K < coarse.nz; ++K)
    for (int J = 0; J < coarse.ny; ++J)
      for (int I = 0; I < coarse.nx; ++I) {
        const std::int64_t cidx = coarse.index(I, J, K);
        if (coarse.mask[size_t(cidx)] != 0) {
          coarse.f[size_t(cidx)] = 0;
          continue;
        }
        const int fi = 2 * I, fj = 2 * J, fk = wdim == 3 ? 2 * K : 0;
        double acc = 0;
        const int dzlo = wdim == 3 ? -1 : 0, dzhi = wdim == 3 ? 1 : 0;
        for (int dk = dzlo; dk <= dzhi; ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              const int ii = fi + di, jj = fj + dj, kk = fk + dk;
              if (ii < 0 || ii >= fine.nx || jj < 0 || jj >= fine.ny) continue;
              if (wdim == 3 && (kk < 0 || kk >= fine.nz)) continue;
              acc += r[size_t(fine.index(ii, jj, kk))] /
                     double(1 << (std::abs(di) + std::abs(dj) + std::abs(dk)));
            }
        coarse.f[size_t(cidx)] = acc / norm;
      }
}

// Add the bi/trilinearly interpolated coarse correction to fine interior nodes.
void prolong_add(const MgLevel& coarse, MgLevel& fine) {
  const int wdim = fine.dim;
  for (int k = 0; k < fine.nz; ++k)
    for (int j = 0; j < fine.ny; ++j)
      for (int i = 0; i < fine.nx; ++i) {
        const std::int64_t fidx = fine.index(i, j, k);
        if (fine.mask[size_t(fidx)] != 0) continue;
        const int I = i / 2, J = j / 2, K = wdim == 3 ? k / 2 : 0;
        const bool ei = (i % 2) == 0, ej = (j % 2) == 0, ek = wdim == 3 ? (k % 2) == 0 : true;
        const int I1 = std::min(I + 1, coarse.nx - 1);
        const int J1 = std::min(J + 1, coarse.ny - 1);
        const int K1 = wdim == 3 ? std::min(K + 1, coarse.nz - 1) : 0;
        auto c = [&](int a, int b, int cc) { return coarse.u[size_t(coarse.index(a, b, cc))]; };
        double v;
        if (wdim == 2) {
          if (ei && ej) v = c(I, J, 0);
          else if (!ei && ej) v = 0.5 * (c(I, J, 0) + c(I1, J, 0));
          else if (ei && !ej) v = 0.5 * (c(I, J, 0) + c(I, J1, 0));
          else v = 0.25 * (c(I, J, 0) + c(I1, J, 0) + c(I, J1, 0) + c(I1, J1, 0));
        } else {
          const double wx1 = ei ? 0.0 : 0.5, wx0 = 1.0 - wx1;
          const double wy1 = ej ? 0.0 : 0.5, wy0 = 1.0 - wy1;
          const double wz1 = ek ? 0.0 : 0.5, wz0 = 1.0 - wz1;
          v = wx0 * wy0 * wz0 * c(I, J, K) + wx1 * wy0 * wz0 * c(I1, J, K) +
              wx0 * wy1 * wz0 * c(I, J1, K) + wx1 * wy1 * wz0 * c(I1, J1, K) +
              wx0 * wy0 * wz1 * c(I, J, K1) + wx1 * wy0 * wz1 * c(I1, J, K1) +
              wx0 * wy1 * wz1 * c(I, J1, K1) + wx1 * wy1 * wz1 * c(I1, J1, K1);
        }
        fine.u[size_t(fidx)] += v;
      }
}

struct MgHierarchy {
  std::vector<MgLevel> levels; // [0] = finest
  std::vector<double> scratch;

  void build(const MgLevel& fine) {
    levels.clear();
    levels.push_back(fine);
    while (levels.back().coarsenable() && int(levels.size()) < 20)
      levels.push_back(coarsen_geometry(levels.back()));
  }

  void vcycle(size_t l, int nu1, int nu2) {
    MgLevel& L = levels[l];
    if (l + 1 == levels.size()) {
      smooth(L, 200);
      return;
    }
    smooth(L, nu1);
    std::vector<double> r;
    residual(L, r);
    MgLevel& C = levels[l + 1];
    std::fill(C.u.begin(), C.u.end(), 0.0);
    restrict_residual(L, r, C);
    vcycle(l + 1, nu1, nu2);
    prolong_add(C, L);
    smooth(L, nu2);
  }
};

LinearSolveStats solve_sor(MgLevel& L, const LinearSolveOptions& opt) {
  const std::int64_t sx = 1, sy = L.nx, sz = std::int64_t(L.nx) * L.ny;
  const double h2 = L.h * L.h;
  const double inv_diag = 1.0 / (2.0 * L.dim);
  const int nmax = std::max({L.nx, L.ny, L.nz});
  const double omega =
      opt.sor_omega > 0 ? opt.sor_omega : 2.0 / (1.0 + std::sin(M_PI / nmax));
  LinearSolveStats stats;
  std::vector<double> r;
  for (long it = 0; it < opt.max_sor_iters; ++it) {
    for (int k = 0; k < L.nz; ++k)
      for (int j = 0; j < L.ny; ++j) {
        std::int64_t idx = L.index(0, j, k);
        for (int i = 0; i < L.nx; ++i, ++idx) {
          if (L.mask[size_t(idx)] != 0) continue;
          double sum = L.u[size_t(idx - sx)] + L.u[size_t(idx + sx)] +
                       L.u[size_t(idx - sy)] + L.u[size_t(idx + sy)];
          if (L.dim == 3) sum += L.u[size_t(idx - sz)] + L.u[size_t(idx + sz)];
          const double gs = (sum + h2 * L.f[size_t(idx)]) * inv_diag;
          L.u[size_t(idx)] += omega * (gs - L.u[size_t(idx)]);
        }
      }
    ++stats.iterations;
    if (it % 20 == 19 || it + 1 == opt.max_sor_iters) {
      stats.residual = residual(L, r);
      if (stats.residual <= opt.tol) {
        stats.converged = true;
        return stats;
      }
    }
  }
  stats.residual = residual(L, r);
  stats.converged = stats.residual <= opt.tol;
  return stats;
}

MgLevel to_level(const ScalarField& u, const std::vector<double>& rhs) {
  MgLevel L;
  L.dim = u.spec.dim;
  L.nx = u.spec.nodes[0];
  L.ny = u.spec.nodes[1];
  L.nz = u.spec.nodes[2];
  L.h = u.spec.h;
  L.mask = u.mask;
  L.u = u.values;
  L.f = rhs;
  return L;
}

} // namespace

double poisson_residual(const ScalarField& u, const std::vector<double>& rhs) {
  MgLevel L = to_level(u, rhs);
  std::vector<double> r;
  return residual(L, r);
}

LinearSolveStats solve_poisson(ScalarField& u, const std::vector<double>& rhs,
                               const LinearSolveOptions& opt) {
  if (rhs.size() != u.values.size())
    throw std::invalid_argument("solve_poisson: rhs size mismatch");

  MgLevel fine = to_level(u, rhs);
  LinearSolveStats stats;

  if (!opt.multigrid || !fine.coarsenable()) {
    stats = solve_sor(fine, opt);
    u.values = fine.u;
    if (!stats.converged)
      throw std::runtime_error("solve_poisson: SOR did not converge, residual " +
                               std::to_string(stats.residual));
    return stats;
  }

  MgHierarchy mg;
  mg.build(fine);

  // Nested iteration start: solve the problem hierarchy coarse-to-fine.
  // Coarse levels carry injected rhs and boundary values.
  for (size_t l = 1; l < mg.levels.size(); ++l) {
    MgLevel& C = mg.levels[l];
    const MgLevel& F = mg.levels[l - 1];
    restrict_residual(F, F.f, C); // full weighting keeps point-load mass
    for (int k = 0; k < C.nz; ++k)
      for (int j = 0; j < C.ny; ++j)
        for (int i = 0; i < C.nx; ++i) {
          const std::int64_t ci = C.index(i, j, k);
          const std::int64_t fi = F.index(2 * i, 2 * j, F.dim == 3 ? 2 * k : 0);
          C.u[size_t(ci)] = F.u[size_t(fi)]; // keeps Dirichlet values; init elsewhere
        }
  }
  for (size_t l = mg.levels.size(); l-- > 0;) {
    if (l + 1 == mg.levels.size()) {
      smooth(mg.levels[l], 400);
    } else {
      // Interpolate the coarser solution into interior nodes as initial guess.
      MgLevel& L = mg.levels[l];
      MgLevel& C = mg.levels[l + 1];
      std::vector<double> keep = L.u;
      std::fill(L.u.begin(), L.u.end(), 0.0);
      for (std::int64_t i = 0; i < L.size(); ++i)
        if (L.mask[size_t(i)] != 0) L.u[size_t(i)] = keep[size_t(i)];
      prolong_add(C, L);
      if (l > 0) mg.vcycle(l, opt.pre_smooth, opt.post_smooth);
    }
  }

  // V-cycles on the finest level until converged.
  std::vector<double> r;
  double first_res = -1;
  for (int cyc = 0; cyc < opt.max_vcycles; ++cyc) {
    stats.residual = residual(mg.levels[0], r);
    if (first_res < 0) first_res = stats.residual;
    if (stats.residual <= opt.tol) {
      stats.converged = true;
      break;
    }
    if (!std::isfinite(stats.residual) || stats.residual > 1e3 * (first_res + 1)) break;
    mg.vcycle(0, opt.pre_smooth, opt.post_smooth);
    ++stats.iterations;
  }
  if (!stats.converged) {
    stats.residual = residual(mg.levels[0], r);
    stats.converged = stats.residual <= opt.tol;
  }
  if (!stats.converged) {
    // Robustness net: restart from the best known iterate with plain SOR.
    MgLevel& L = mg.levels[0];
    if (!std::isfinite(stats.residual)) L.u = u.values; // caller's guess + Dirichlet data
    const LinearSolveStats sor_stats = solve_sor(L, opt);
    stats.iterations += sor_stats.iterations;
    stats.residual = sor_stats.residual;
    stats.converged = sor_stats.converged;
  }
  u.values = mg.levels[0].u;
  if (!stats.converged)
    throw std::runtime_error("solve_poisson: multigrid did not converge, residual " +
                             std::to_string(stats.residual));
  return stats;
}

} // namespace perfhom
