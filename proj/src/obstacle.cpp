#include "perfhom/obstacle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>

#include "perfhom/linsolve.hpp"

namespace perfhom {

namespace {

// Internal PSOR state on one grid level.
struct PsorLevel {
  int dim = 2;
  int nx = 0, ny = 0, nz = 1;
  double h = 0;
  std::vector<std::uint8_t> mask;        // Dirichlet
  std::vector<std::uint8_t> constrained; // lower-zero nodes
  std::vector<double> v, f;

  std::int64_t size() const { return std::int64_t(nx) * ny * nz; }
  std::int64_t index(int i, int j, int k) const {
    return (std::int64_t(k) * ny + j) * nx + i;
  }
  bool coarsenable() const {
    bool ok = (nx - 1) % 2 == 0 && nx >= 9 && (ny - 1) % 2 == 0 && ny >= 9;
    if (dim == 3) ok = ok && (nz - 1) % 2 == 0 && nz >= 9;
    return ok;
  }
};

// Projected SOR sweeps until the stencil residual on inactive nodes drops
// below tol. Returns sweep count; residual/slack via out-params.
long psor_iterate(PsorLevel& L, const PsorOptions& opt, double tol, double* res_out,
                  double* slack_out) {
  const std::int64_t sx = 1, sy = L.nx, sz = std::int64_t(L.nx) * L.ny;
  const double h2 = L.h * L.h;
  const double inv_diag = 1.0 / (2.0 * L.dim);
  const double inv_h2 = 1.0 / h2;
  const double diag = 2.0 * L.dim;
  long sweeps = 0;
  double res = 0, slack = 0;
  const int check_every = 10;
  for (long it = 0; it < opt.max_iters; ++it) {
    for (int k = 0; k < L.nz; ++k)
      for (int j = 0; j < L.ny; ++j) {
        std::int64_t idx = L.index(0, j, k);
        for (int i = 0; i < L.nx; ++i, ++idx) {
          if (L.mask[size_t(idx)] != 0) continue;
          double sum = L.v[size_t(idx - sx)] + L.v[size_t(idx + sx)] +
                       L.v[size_t(idx - sy)] + L.v[size_t(idx + sy)];
          if (L.dim == 3) sum += L.v[size_t(idx - sz)] + L.v[size_t(idx + sz)];
          const double gs = (sum + h2 * L.f[size_t(idx)]) * inv_diag;
          double vn = L.v[size_t(idx)] + opt.omega * (gs - L.v[size_t(idx)]);
          if (L.constrained[size_t(idx)] != 0 && vn < 0) vn = 0;
          L.v[size_t(idx)] = vn;
        }
      }
    ++sweeps;
    if (it % check_every == check_every - 1 || it + 1 == opt.max_iters) {
      res = 0;
      slack = 0;
      for (int k = 0; k < L.nz; ++k)
        for (int j = 0; j < L.ny; ++j) {
          std::int64_t idx = L.index(0, j, k);
          for (int i = 0; i < L.nx; ++i, ++idx) {
            if (L.mask[size_t(idx)] != 0) continue;
            double sum = L.v[size_t(idx - sx)] + L.v[size_t(idx + sx)] +
                         L.v[size_t(idx - sy)] + L.v[size_t(idx + sy)];
            if (L.dim == 3) sum += L.v[size_t(idx - sz)] + L.v[size_t(idx + sz)];
            const double stencil = L.f[size_t(idx)] + (sum - diag * L.v[size_t(idx)]) * inv_h2;
            const bool active = L.constrained[size_t(idx)] != 0 && L.v[size_t(idx)] == 0.0;
            if (active)
              slack = std::max(slack, stencil); // need -lap v - f >= 0, i.e. stencil <= 0
            else
              res = std::max(res, std::abs(stencil));
          }
        }
      if (res <= tol) break;
    }
  }
  if (res_out) *res_out = res;
  if (slack_out) *slack_out = std::max(0.0, slack);
  return sweeps;
}

PsorLevel coarsen_problem(const PsorLevel& F) {
  PsorLevel C;
  C.dim = F.dim;
  C.nx = (F.nx - 1) / 2 + 1;
  C.ny = (F.ny - 1) / 2 + 1;
  C.nz = F.dim == 3 ? (F.nz - 1) / 2 + 1 : 1;
  C.h = 2 * F.h;
  const std::int64_t sz = C.size();
  C.mask.assign(size_t(sz), 0);
  C.constrained.assign(size_t(sz), 0);
  C.v.assign(size_t(sz), 0.0);
  C.f.assign(size_t(sz), 0.0);
  const double norm = F.dim == 3 ? 8.0 : 4.0;
  for (int K = 0; K < C.nz; ++K)
    for (int J = 0; J < C.ny; ++J)
      for (int I = 0; I < C.nx; ++I) {
        const std::int64_t ci = C.index(I, J, K);
        const int fi = 2 * I, fj = 2 * J, fk = F.dim == 3 ? 2 * K : 0;
        const std::int64_t ffi = F.index(fi, fj, fk);
        C.mask[size_t(ci)] = F.mask[size_t(ffi)];
        C.constrained[size_t(ci)] = F.constrained[size_t(ffi)];
        C.v[size_t(ci)] = F.v[size_t(ffi)];
        if (C.mask[size_t(ci)] != 0) continue;
        // Full weighting keeps point-load mass on coarse levels.
        double acc = 0;
        const int dzlo = F.dim == 3 ? -1 : 0, dzhi = F.dim == 3 ? 1 : 0;
        for (int dk = dzlo; dk <= dzhi; ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              const int ii = fi + di, jj = fj + dj, kk = fk + dk;
              if (ii < 0 || ii >= F.nx || jj < 0 || jj >= F.ny) continue;
              if (F.dim == 3 && (kk < 0 || kk >= F.nz)) continue;
              acc += F.f[size_t(F.index(ii, jj, kk))] /
                     double(1 << (std::abs(di) + std::abs(dj) + std::abs(dk)));
            }
        C.f[size_t(ci)] = acc / norm;
      }
  return C;
}

void prolong_into(const PsorLevel& C, PsorLevel& F) {
  for (int k = 0; k < F.nz; ++k)
    for (int j = 0; j < F.ny; ++j)
      for (int i = 0; i < F.nx; ++i) {
        const std::int64_t fidx = F.index(i, j, k);
        if (F.mask[size_t(fidx)] != 0) continue;
        const int I = i / 2, J = j / 2, K = F.dim == 3 ? k / 2 : 0;
        const int I1 = std::min(I + 1, C.nx - 1);
        const int J1 = std::min(J + 1, C.ny - 1);
        const int K1 = F.dim == 3 ? std::min(K + 1, C.nz - 1) : 0;
        const double wx1 = (i % 2) ? 0.5 : 0.0, wx0 = 1 - wx1;
        const double wy1 = (j % 2) ? 0.5 : 0.0, wy0 = 1 - wy1;
        const double wz1 = (F.dim == 3 && (k % 2)) ? 0.5 : 0.0, wz0 = 1 - wz1;
        auto c = [&](int a, int b, int cc) { return C.v[size_t(C.index(a, b, cc))]; };
        double val = wx0 * wy0 * wz0 * c(I, J, K) + wx1 * wy0 * wz0 * c(I1, J, K) +
                     wx0 * wy1 * wz0 * c(I, J1, K) + wx1 * wy1 * wz0 * c(I1, J1, K);
        if (F.dim == 3)
          val += wx0 * wy0 * wz1 * c(I, J, K1) + wx1 * wy0 * wz1 * c(I1, J, K1) +
                 wx0 * wy1 * wz1 * c(I, J1, K1) + wx1 * wy1 * wz1 * c(I1, J1, K1);
        if (F.constrained[size_t(fidx)] != 0 && val < 0) val = 0;
        F.v[size_t(fidx)] = val;
      }
}

PsorLevel to_level(const ObstacleProblem& p) {
  PsorLevel L;
  const GridSpec& g = p.spec();
  L.dim = g.dim;
  L.nx = g.nodes[0];
  L.ny = g.nodes[1];
  L.nz = g.nodes[2];
  L.h = g.h;
  L.mask = p.base.mask;
  L.v = p.base.values;
  L.f = p.rhs;
  L.constrained.assign(size_t(g.num_nodes()), 0);
  for (std::int64_t idx : p.constraint_nodes.members)
    if (L.mask[size_t(idx)] == 0) L.constrained[size_t(idx)] = 1;
  return L;
}

} // namespace

void ObstacleProblem::validate() const {
  if (rhs.size() != base.values.size())
    throw std::invalid_argument("ObstacleProblem: rhs size mismatch");
  for (double v : rhs)
    if (!std::isfinite(v)) throw std::invalid_argument("ObstacleProblem: rhs must be finite");
  constraint_nodes.validate();
  if (!constraint_nodes.spec.same_geometry(base.spec))
    throw std::invalid_argument("ObstacleProblem: constraint nodes on a different grid");
}

ObstacleSolution psor_solve(const ObstacleProblem& problem, const PsorOptions& opt) {
  problem.validate();

  if (problem.kind == ConstraintKind::equality_one) {
    // Equality holes are Dirichlet nodes (w = 1 in T_eps).
    ObstacleSolution sol;
    sol.field = problem.base;
    for (std::int64_t idx : problem.constraint_nodes.members) sol.field.set_dirichlet(idx, 1.0);
    LinearSolveOptions lin;
    lin.tol = opt.tol;
    const LinearSolveStats stats = solve_poisson(sol.field, problem.rhs, lin);
    sol.iterations = stats.iterations;
    sol.residual = stats.residual;
    sol.contact.assign(size_t(problem.spec().num_nodes()), 0);
    for (std::int64_t idx : problem.constraint_nodes.members) sol.contact[size_t(idx)] = 1;
    return sol;
  }

  PsorLevel fine = to_level(problem);
  long total_sweeps = 0;

  if (opt.warm_start) {
    std::vector<PsorLevel> chain;
    chain.push_back(std::move(fine));
    while (chain.back().coarsenable() && chain.back().size() > 4096)
      chain.push_back(coarsen_problem(chain.back()));
    for (std::size_t l = chain.size(); l-- > 0;) {
      if (l + 1 < chain.size()) prolong_into(chain[l + 1], chain[l]);
      if (l > 0) {
        double r, s;
        total_sweeps += psor_iterate(chain[l], opt, opt.tol, &r, &s);
      }
    }
    fine = std::move(chain[0]);
  }

  double res = 0, slack = 0;
  total_sweeps += psor_iterate(fine, opt, opt.tol, &res, &slack);
  if (res > opt.tol)
    throw SolverError("psor_solve: no convergence within max_iters, residual " +
                          std::to_string(res),
                      res);

  ObstacleSolution sol;
  sol.field = problem.base;
  sol.field.values = std::move(fine.v);
  sol.iterations = total_sweeps;
  sol.residual = res;
  sol.slack_residual = slack;
  sol.contact.assign(size_t(problem.spec().num_nodes()), 0);
  for (std::int64_t idx : problem.constraint_nodes.members)
    if (sol.field.mask[size_t(idx)] == 0 && sol.field.values[size_t(idx)] == 0.0)
      sol.contact[size_t(idx)] = 1;
  sol.field.check_finite("psor_solve");
  return sol;
}

ObstacleSolution solve_eps_problem(const std::vector<double>& f, const HoleField& holes,
                                   const GridSpec& spec, const PsorOptions& opt) {
  if (!holes.t_eps.spec.same_geometry(spec))
    throw std::invalid_argument("solve_eps_problem: holes rasterized on a different grid");
  ObstacleProblem p;
  p.base = ScalarField::zeros(spec);
  p.rhs = f;
  p.constraint_nodes = holes.t_eps;
  p.kind = ConstraintKind::lower_zero;
  return psor_solve(p, opt);
}

ObstacleProblem make_auxiliary_problem(double alpha, const GridSpec& window,
                                       const GammaField& gamma) {
  const int n = window.dim;
  if (gamma.config.dim != n)
    throw ConfigError("auxiliary problem: gamma dimension mismatch");
  const double m_real = 1.0 / window.h;
  const int m = int(std::lround(m_real));
  if (std::abs(m_real - m) > 1e-9 || m < 4)
    throw ConfigError("auxiliary problem: window must have an integer m >= 4 cells per unit");
  for (int a = 0; a < n; ++a) {
    if (std::abs(window.origin[a] - std::lround(window.origin[a])) > 1e-9)
      throw ConfigError("auxiliary problem: window must be aligned to the unit lattice");
    if (std::abs(window.extent[a] - std::lround(window.extent[a])) > 1e-9)
      throw ConfigError("auxiliary problem: window extent must be an integer");
  }

  ObstacleProblem p;
  p.base = ScalarField::zeros(window);
  p.rhs.assign(size_t(window.num_nodes()), -alpha);
  p.kind = ConstraintKind::lower_zero;
  p.constraint_nodes.spec = window;

  const double load_scale = 1.0 / window.cell_volume();
  Index3 klo{0, 0, 0}, khi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    klo[a] = int(std::lround(window.origin[a])) + 1;
    khi[a] = int(std::lround(window.origin[a] + window.extent[a])) - 1;
  }
  for (int kz = (n == 3 ? klo[2] : 0); kz <= (n == 3 ? khi[2] : 0); ++kz)
    for (int ky = klo[1]; ky <= khi[1]; ++ky)
      for (int kx = klo[0]; kx <= khi[0]; ++kx) {
        const Index3 k{kx, ky, kz};
        if (!gamma.window.contains(k))
          throw ConfigError("auxiliary problem: lattice point outside gamma window");
        const double gk = gamma.at(k);
        if (gk == 0) continue;
        Index3 node{0, 0, 0};
        for (int a = 0; a < n; ++a)
          node[a] = int(std::lround((k[a] - window.origin[a]) / window.h));
        p.rhs[size_t(window.index(node[0], node[1], node[2]))] += gk * load_scale;
      }

  // v >= 0 on the whole (open) window.
  for (std::int64_t idx = 0; idx < window.num_nodes(); ++idx)
    if (p.base.mask[size_t(idx)] == 0) p.constraint_nodes.members.push_back(idx);
  return p;
}

ObstacleSolution solve_auxiliary(double alpha, const GridSpec& window, const GammaField& gamma,
                                 const PsorOptions& opt) {
  return psor_solve(make_auxiliary_problem(alpha, window, gamma), opt);
}

ObstacleSolution brute_force_obstacle(const ObstacleProblem& problem) {
  problem.validate();
  if (problem.kind != ConstraintKind::lower_zero)
    throw std::invalid_argument("brute_force_obstacle: lower_zero constraints only");
  const GridSpec& g = problem.spec();

  std::vector<std::int64_t> free_nodes;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx)
    if (problem.base.mask[size_t(idx)] == 0) free_nodes.push_back(idx);
  if (free_nodes.size() > 500)
    throw std::invalid_argument("brute_force_obstacle: too many interior nodes (limit ~500)");

  std::vector<std::int64_t> cons;
  for (std::int64_t idx : problem.constraint_nodes.members)
    if (problem.base.mask[size_t(idx)] == 0) cons.push_back(idx);
  if (cons.size() > 20)
    throw std::invalid_argument("brute_force_obstacle: more than 20 constrained nodes");

  std::vector<std::int64_t> col_of(size_t(g.num_nodes()), -1);
  for (std::size_t c = 0; c < free_nodes.size(); ++c) col_of[size_t(free_nodes[c])] = std::int64_t(c);

  const int m = int(free_nodes.size());
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double diag = 2.0 * g.dim * inv_h2;
  const std::int64_t strides[3] = {1, g.nodes[0], std::int64_t(g.nodes[0]) * g.nodes[1]};

  Eigen::VectorXd b(m);
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < m; ++c) {
    const std::int64_t idx = free_nodes[size_t(c)];
    trips.emplace_back(c, c, diag);
    double bc = problem.rhs[size_t(idx)];
    for (int a = 0; a < g.dim; ++a)
      for (int s = -1; s <= 1; s += 2) {
        const std::int64_t nb = idx + s * strides[a];
        if (col_of[size_t(nb)] >= 0)
          trips.emplace_back(c, int(col_of[size_t(nb)]), -inv_h2);
        else
          bc += problem.base.values[size_t(nb)] * inv_h2;
      }
    b(c) = bc;
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());

  const std::size_t nsub = std::size_t(1) << cons.size();
  double best_energy = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  std::vector<std::uint8_t> best_active;

  for (std::size_t sub = 0; sub < nsub; ++sub) {
    // Active nodes are pinned at zero: drop their rows/columns.
    std::vector<std::uint8_t> active(size_t(m), 0);
    for (std::size_t ci = 0; ci < cons.size(); ++ci)
      if (sub & (std::size_t(1) << ci)) active[size_t(col_of[size_t(cons[ci])])] = 1;

    std::vector<int> sub_col(size_t(m), -1);
    int mm = 0;
    for (int c = 0; c < m; ++c)
      if (!active[size_t(c)]) sub_col[size_t(c)] = mm++;

    std::vector<Eigen::Triplet<double>> st;
    Eigen::VectorXd sb(mm);
    for (int c = 0; c < m; ++c) {
      if (active[size_t(c)]) continue;
      sb(sub_col[size_t(c)]) = b(c);
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
        if (!active[size_t(it.row())])
          st.emplace_back(sub_col[size_t(it.row())], sub_col[size_t(c)], it.value());
    }
    Eigen::SparseMatrix<double> SA(mm, mm);
    SA.setFromTriplets(st.begin(), st.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(SA);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd sv = ldlt.solve(sb);

    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < m; ++c)
      if (!active[size_t(c)]) v(c) = sv(sub_col[size_t(c)]);

    bool feasible = true;
    for (std::int64_t cn : cons)
      if (v(int(col_of[size_t(cn)])) < -1e-11) { feasible = false; break; }
    if (!feasible) continue;

    // J(v) = 1/2 v^T A v - b^T v (up to the fixed boundary contribution).
    const double energy = 0.5 * v.dot(A * v) - b.dot(v);
    if (energy < best_energy - 1e-15) {
      best_energy = energy;
      best = v;
      best_active.assign(size_t(m), 0);
      for (int c = 0; c < m; ++c) best_active[size_t(c)] = active[size_t(c)];
    }
  }
  if (!best.size()) throw SolverError("brute_force_obstacle: no feasible active set", 0);

  ObstacleSolution sol;
  sol.field = problem.base;
  for (int c = 0; c < m; ++c)
    sol.field.values[size_t(free_nodes[size_t(c)])] = best_active[size_t(c)] ? 0.0 : best(c);
  sol.contact.assign(size_t(g.num_nodes()), 0);
  for (std::int64_t cn : cons)
    if (sol.field.values[size_t(cn)] == 0.0) sol.contact[size_t(cn)] = 1;
  sol.iterations = long(nsub);
  sol.residual = 0;
  return sol;
}

KktReport check_kkt(const ObstacleSolution& sol, const ObstacleProblem& problem) {
  KktReport rep;
  const GridSpec& g = problem.spec();
  const ScalarField lap = laplacian_apply(sol.field);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (sol.field.mask[size_t(idx)] != 0) continue;
    const double stencil = problem.rhs[size_t(idx)] + lap.values[size_t(idx)];
    const bool active = sol.contact[size_t(idx)] != 0;
    if (active)
      rep.complementarity_residual = std::max(rep.complementarity_residual, stencil);
    else
      rep.stencil_residual = std::max(rep.stencil_residual, std::abs(stencil));
  }
  rep.complementarity_residual = std::max(0.0, rep.complementarity_residual);
  for (std::int64_t idx : problem.constraint_nodes.members) {
    const double v = sol.field.values[size_t(idx)];
    if (problem.kind == ConstraintKind::lower_zero)
      rep.feasibility_violation = std::max(rep.feasibility_violation, -v);
    else
      rep.feasibility_violation = std::max(rep.feasibility_violation, std::abs(v - 1.0));
  }
  rep.feasibility_violation = std::max(0.0, rep.feasibility_violation);
  return rep;
}

double h_alpha_profile(double dist, double alpha, double r, int n) {
  if (n != 2 && n != 3) throw std::invalid_argument("h_alpha_profile: n must be 2 or 3");
  if (!(dist > 0)) throw std::invalid_argument("h_alpha_profile: singular input x = k");
  const double quad = alpha / (2.0 * n) * dist * dist;
  if (n == 2) return quad - r * std::log(dist);
  return quad + r / dist; // r^(n-2)/d^(n-2) with n = 3
}

double h_alpha_min_radius(double alpha, double r, int n) {
  if (!(alpha > 0) || !(r > 0))
    throw std::invalid_argument("h_alpha_min_radius: need alpha > 0 and r > 0");
  if (n == 2) return std::sqrt(2.0 * r / alpha);
  if (n == 3) return std::cbrt(n * (n - 2) * r / alpha);
  throw std::invalid_argument("h_alpha_min_radius: n must be 2 or 3");
}

double h_alpha_barrier_offset(double alpha, double r, int n) {
  if (!(alpha > 0) || !(r > 0))
    throw std::invalid_argument("h_alpha_barrier_offset: need alpha > 0 and r > 0");
  if (n == 2) return 0.5 * r * (1.0 - std::log(2.0 * r / alpha));
  if (n == 3)
    return std::pow(alpha / (2.0 * n), (n - 2.0) / n) * std::pow(r, 2.0 * (n - 2.0) / n) *
           std::pow((n - 2.0) / 2.0, 2.0 / n) * (double(n) / (n - 2.0));
  throw std::invalid_argument("h_alpha_barrier_offset: n must be 2 or 3");
}

double lower_bound_check(const ObstacleSolution& vbar, const Index3& k, double alpha,
                         double gamma_k) {
  const GridSpec& g = vbar.field.spec;
  const int n = g.dim;
  const Vec3 c{double(k[0]), double(k[1]), n == 3 ? double(k[2]) : 0.0};
  for (int a = 0; a < n; ++a)
    if (c[a] - 1 < g.origin[a] - 1e-9 || c[a] + 1 > g.origin[a] + g.extent[a] + 1e-9)
      throw std::invalid_argument("lower_bound_check: B_1(k) must lie inside the window");
  const double r = radius_from_gamma(gamma_k, n);
  double margin = std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Vec3 p = g.node_pos(idx);
    double d2 = 0;
    for (int a = 0; a < n; ++a) d2 += (p[a] - c[a]) * (p[a] - c[a]);
    const double d = std::sqrt(d2);
    if (d <= 2 * g.h || d > 1.0) continue;
    const double bound = h_alpha_profile(d, alpha, r, n) - alpha / (2.0 * n) -
                         (n == 3 ? r : 0.0); // r^(n-2), n = 3
    margin = std::min(margin, vbar.field.values[size_t(idx)] - bound);
  }
  return margin;
}

} // namespace perfhom
