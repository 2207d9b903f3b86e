#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perfhom/corrector.hpp"

namespace perfhom {

// Nodewise max(0, -u).
ScalarField negative_part(const ScalarField& u);

// J(u) = dirichlet_energy(u) - sum h^n f u.
double energy_J(const ScalarField& u, const std::vector<double>& f);

// J_alpha(u) = J(u) + (1/2) alpha0 sum h^n (u_-)^2.
double energy_J_alpha(const ScalarField& u, const std::vector<double>& f, double alpha0);

struct HomogenizedProblem {
  GridSpec spec;
  std::vector<double> f;
  double alpha0 = 0; // >= 0

  void validate() const;
};

struct HomSolveOptions {
  double update_tol = 1e-9; // max-norm of the fixed-point update
  int max_iters = 400;
  double relax = 0.5;
  LinearSolveOptions lin{};
};

// Minimizes the convex limit energy J_alpha by the damped fixed point
// -lap u_{j+1} = f + alpha0 (u_j)_-.
ScalarField solve_homogenized(const HomogenizedProblem& problem,
                              const HomSolveOptions& opt = {});

struct ConvergenceEntry {
  double eps = 0;
  std::uint64_t seed = 0;
  double l2_error = 0;   // ||u_eps - u_bar||_2 on the common grid
  double energy_J_eps = 0;
  double energy_gap = 0; // |J(u_eps) - J_alpha(u_bar)|
  std::size_t hole_count = 0;
  std::string error;     // per-eps failure annotation (empty = ok)
};

struct ConvergenceReport {
  std::vector<double> eps_list;
  std::vector<ConvergenceEntry> entries; // eps-major, seed-minor order
  double alpha0_used = 0;
  std::string medium_summary;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mean_l2, spread_l2, mean_gap; // aligned with eps_list
};

struct ConvergenceParams {
  HoleMode mode = HoleMode::automatic;
  PsorOptions psor{};
  HomSolveOptions hom{};
  int workers = 1;
};

// End-to-end run: for each (eps, seed) build holes on the common grid, solve
// the eps-problem, and compare with the homogenized solution at alpha0.
// Stage failures are annotated per entry rather than aborting the sweep.
ConvergenceReport convergence_experiment(const MediumConfig& config,
                                         const std::vector<double>& f,
                                         const std::vector<double>& eps_list, double alpha0,
                                         const std::vector<std::uint64_t>& seeds,
                                         const GridSpec& grid,
                                         const ConvergenceParams& params = {});

} // namespace perfhom
