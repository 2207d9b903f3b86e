#include "perfhom/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace perfhom {

ScalarField negative_part(const ScalarField& u) {
  ScalarField out = u;
  for (auto& v : out.values) v = std::max(0.0, -v);
  return out;
}

double energy_J(const ScalarField& u, const std::vector<double>& f) {
  if (f.size() != u.values.size()) throw std::invalid_argument("energy_J: f size mismatch");
  double fu = 0;
  for (std::size_t i = 0; i < f.size(); ++i) fu += f[i] * u.values[i];
  return dirichlet_energy(u) - u.spec.cell_volume() * fu;
}

double energy_J_alpha(const ScalarField& u, const std::vector<double>& f, double alpha0) {
  double neg2 = 0;
  for (double v : u.values) {
    const double um = std::max(0.0, -v);
    neg2 += um * um;
  }
  return energy_J(u, f) + 0.5 * alpha0 * u.spec.cell_volume() * neg2;
}

void HomogenizedProblem::validate() const {
  if (alpha0 < 0) throw std::invalid_argument("HomogenizedProblem: alpha0 must be >= 0");
  if (f.size() != size_t(spec.num_nodes()))
    throw std::invalid_argument("HomogenizedProblem: f size mismatch");
}

ScalarField solve_homogenized(const HomogenizedProblem& problem, const HomSolveOptions& opt) {
  problem.validate();
  const GridSpec& g = problem.spec;
  ScalarField u = ScalarField::zeros(g);
  std::vector<double> rhs = problem.f;
  solve_poisson(u, rhs, opt.lin);
  if (problem.alpha0 == 0) return u;

  ScalarField next = u;
  for (int it = 0; it < opt.max_iters; ++it) {
    for (std::size_t i = 0; i < rhs.size(); ++i)
      rhs[i] = problem.f[i] + problem.alpha0 * std::max(0.0, -u.values[i]);
    next.values = u.values; // warm start the linear solve
    solve_poisson(next, rhs, opt.lin);
    double update = 0;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const double blended = u.values[i] + opt.relax * (next.values[i] - u.values[i]);
      update = std::max(update, std::abs(blended - u.values[i]));
      u.values[i] = blended;
    }
    if (update <= opt.update_tol) return u;
  }
  throw std::runtime_error("solve_homogenized: fixed point did not converge");
}

namespace {

std::string law_name(MediumLaw law) {
  switch (law) {
    case MediumLaw::constant: return "constant";
    case MediumLaw::iid_uniform: return "iid_uniform";
    case MediumLaw::bernoulli_dilution: return "bernoulli_dilution";
    case MediumLaw::moving_average: return "moving_average";
    case MediumLaw::shifted_periodic: return "shifted_periodic";
  }
  return "?";
}

} // namespace

ConvergenceReport convergence_experiment(const MediumConfig& config,
                                         const std::vector<double>& f,
                                         const std::vector<double>& eps_list, double alpha0,
                                         const std::vector<std::uint64_t>& seeds,
                                         const GridSpec& grid,
                                         const ConvergenceParams& params) {
  config.validate();
  if (eps_list.empty()) throw std::invalid_argument("convergence_experiment: empty eps list");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (eps_list[i] >= eps_list[i - 1])
      throw std::invalid_argument("convergence_experiment: eps_list must decrease");

  ConvergenceReport rep;
  rep.eps_list = eps_list;
  rep.alpha0_used = alpha0;
  rep.seeds = seeds;
  {
    std::ostringstream ms;
    ms << law_name(config.law) << " dim=" << config.dim << " gamma_bar=" << config.gamma_bar;
    rep.medium_summary = ms.str();
  }

  HomogenizedProblem hp{grid, f, alpha0};
  const ScalarField ubar = solve_homogenized(hp, params.hom);
  const double j_alpha_bar = energy_J_alpha(ubar, f, alpha0);

  for (double eps : eps_list) {
    std::vector<double> l2s, gaps;
    for (std::uint64_t seed : seeds) {
      ConvergenceEntry entry;
      entry.eps = eps;
      entry.seed = seed;
      try {
        LatticeBox box;
        box.dim = config.dim;
        for (int a = 0; a < config.dim; ++a) {
          box.lo[a] = int(std::floor(grid.origin[a] / eps)) - 1;
          box.hi[a] = int(std::ceil((grid.origin[a] + grid.extent[a]) / eps)) + 2;
        }
        if (config.dim == 2) { box.lo[2] = 0; box.hi[2] = 1; }
        const GammaField gamma = sample_gamma_field(config, seed, box);
        const HoleField holes = build_holes(gamma, eps, grid, params.mode);
        entry.hole_count = holes.num_holes();
        const ObstacleSolution ue = solve_eps_problem(f, holes, grid, params.psor);

        ScalarField diff = ue.field;
        for (std::size_t i = 0; i < diff.values.size(); ++i)
          diff.values[i] -= ubar.values[i];
        entry.l2_error = lp_norm(diff, 2.0);
        entry.energy_J_eps = energy_J(ue.field, f);
        entry.energy_gap = std::abs(entry.energy_J_eps - j_alpha_bar);
        l2s.push_back(entry.l2_error);
        gaps.push_back(entry.energy_gap);
      } catch (const std::exception& e) {
        entry.error = e.what();
      }
      rep.entries.push_back(std::move(entry));
    }
    auto mean = [](const std::vector<double>& xs) {
      if (xs.empty()) return 0.0;
      double s = 0;
      for (double x : xs) s += x;
      return s / double(xs.size());
    };
    const double ml = mean(l2s);
    double spread = 0;
    for (double x : l2s) spread = std::max(spread, std::abs(x - ml));
    rep.mean_l2.push_back(ml);
    rep.spread_l2.push_back(spread);
    rep.mean_gap.push_back(mean(gaps));
  }
  return rep;
}

} // namespace perfhom
