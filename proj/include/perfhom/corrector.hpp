#pragma once

#include <utility>
#include <vector>

#include "perfhom/linsolve.hpp"
#include "perfhom/obstacle.hpp"

namespace perfhom {

struct CorrectorRun {
  double eps = 0;
  double alpha0 = 0;
  HoleField holes;
  ScalarField w;
  double l2 = 0;
  std::vector<std::pair<double, double>> lp; // (p, norm) for p in {1, 2, 4}
  double h1_semi = 0;                        // ||grad w||_2
  bool boundary_flux_ok = false;
};

// Corrector: lap w = alpha0 in D_eps, w = 1 on hole nodes (Dirichlet),
// w = 0 on the outer boundary.
CorrectorRun solve_corrector(double eps, double alpha0, const HoleField& holes,
                             const GridSpec& spec, const LinearSolveOptions& lin = {});

// Free solution: lap w0 = alpha0 - sum_k eps^n gamma(k) delta(x - eps k),
// w0 = 0 on the boundary. Lattice points eps*k must land on grid nodes.
ScalarField solve_free_corrector(double eps, double alpha0, const GammaField& gamma,
                                 const GridSpec& spec, const LinearSolveOptions& lin = {});

struct NormScaling {
  double slope = 0; // least-squares slope of log ||w||_p vs log eps
  bool degenerate = false;
  std::vector<std::pair<double, double>> eps_norm;
  std::vector<double> log_ratio; // n=2 diagnostics: norm / (eps^2 |log eps|)
};
NormScaling norm_scaling(const std::vector<CorrectorRun>& runs, double p);

// (int |grad w|^2 phi, alpha0 int phi); phi must vanish on the boundary.
std::pair<double, double> gradient_concentration(const CorrectorRun& run,
                                                 const ScalarField& phi);

struct H1Bound {
  double max_h1 = 0;
  double ratio = 0; // max/min over the sweep (0 on the all-zero degenerate sweep)
};
H1Bound h1_bound_check(const std::vector<CorrectorRun>& runs);

} // namespace perfhom
