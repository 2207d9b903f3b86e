#pragma once

#include <vector>

#include "perfhom/grid.hpp"

namespace perfhom {

struct LinearSolveOptions {
  double tol = 1e-10;      // max-norm of rhs + lap(u) on interior nodes
  int max_vcycles = 200;
  int pre_smooth = 2;
  int post_smooth = 2;
  bool multigrid = true;   // fall back to SOR when false or grid not coarsenable
  double sor_omega = 0.0;  // 0 = choose from grid size
  long max_sor_iters = 2000000;
};

struct LinearSolveStats {
  long iterations = 0; // V-cycles or SOR sweeps
  double residual = 0;
  bool converged = false;
};

// Solves -lap_h u = rhs on interior nodes; Dirichlet nodes keep the values
// already stored in u. Throws on non-convergence.
LinearSolveStats solve_poisson(ScalarField& u, const std::vector<double>& rhs,
                               const LinearSolveOptions& opt = {});

// Max-norm of rhs + lap_h(u) over interior nodes.
double poisson_residual(const ScalarField& u, const std::vector<double>& rhs);

} // namespace perfhom
