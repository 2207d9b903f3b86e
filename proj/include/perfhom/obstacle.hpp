#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perfhom/grid.hpp"
#include "perfhom/random_media.hpp"

namespace perfhom {

enum class ConstraintKind { lower_zero, equality_one };

// Discrete constrained problem: -lap v = rhs off the active set, Dirichlet
// data held in base (mask + values), and either v >= 0 (lower_zero) or v = 1
// (equality_one) on constraint_nodes. Equality holes are enforced as
// Dirichlet nodes.
struct ObstacleProblem {
  ScalarField base; // mask, Dirichlet values, initial interior guess
  std::vector<double> rhs;
  NodeSet constraint_nodes;
  ConstraintKind kind = ConstraintKind::lower_zero;

  const GridSpec& spec() const { return base.spec; }
  void validate() const;
};

struct ObstacleSolution {
  ScalarField field;
  std::vector<std::uint8_t> contact; // per node: constraint active
  long iterations = 0;
  double residual = 0;       // max-norm stencil residual on inactive interior
  double slack_residual = 0; // complementarity violation on active nodes
  std::int64_t contact_count() const {
    std::int64_t c = 0;
    for (auto b : contact) c += b;
    return c;
  }
};

struct SolverError : std::runtime_error {
  double residual;
  SolverError(const std::string& what, double res) : std::runtime_error(what), residual(res) {}
};

struct PsorOptions {
  double omega = 1.5;
  double tol = 1e-8;
  long max_iters = 100000;
  bool warm_start = true; // nested coarse-grid initialization
};

// Projected successive over-relaxation. Exact projection: active nodes hold
// an exact 0, so contact needs no threshold.
ObstacleSolution psor_solve(const ObstacleProblem& problem, const PsorOptions& opt = {});

// eps-level obstacle problem (solution u^eps): min J(v) subject to v >= 0 on
// the hole nodes, v = 0 on the outer boundary.
ObstacleSolution solve_eps_problem(const std::vector<double>& f, const HoleField& holes,
                                   const GridSpec& spec, const PsorOptions& opt = {});

// Auxiliary lattice-scale problem on a window [0,t]^n: minimize
// int(1/2 |grad v|^2 + alpha v) - sum_k gamma(k) v(k) over v >= 0, v = 0 on
// the window boundary. Each lattice Dirac is a nodal load of weight gamma(k)
// (density gamma(k)/h^n on its node).
ObstacleSolution solve_auxiliary(double alpha, const GridSpec& window, const GammaField& gamma,
                                 const PsorOptions& opt = {});

// Builds the auxiliary problem without solving (shared by the solver and
// oracles/tests).
ObstacleProblem make_auxiliary_problem(double alpha, const GridSpec& window,
                                       const GammaField& gamma);

// Active-set enumeration oracle: try all 2^c active sets, solve the
// equality-constrained system for each, return the feasible minimizer.
// Limits: <= ~500 interior nodes, <= 20 constrained nodes.
ObstacleSolution brute_force_obstacle(const ObstacleProblem& problem);

struct KktReport {
  double stencil_residual = 0;
  double feasibility_violation = 0;
  double complementarity_residual = 0;
};
KktReport check_kkt(const ObstacleSolution& sol, const ObstacleProblem& problem);

// Closed-form radial barrier h_{alpha,k} at distance d from the lattice
// point: (alpha/2n) d^2 + r^(n-2)/d^(n-2) for n >= 3, (alpha/4) d^2 - r log d
// for n = 2.
double h_alpha_profile(double dist, double alpha, double r, int n);
// Radius where h_{alpha,k} attains its minimum.
double h_alpha_min_radius(double alpha, double r, int n);
// Offset D(alpha,k) that makes the barrier and its gradient vanish there.
double h_alpha_barrier_offset(double alpha, double r, int n);

// Minimum over the annulus 2h < |x-k| <= 1 of v - (h_{alpha,k} - alpha/2n -
// r^(n-2)); the maximum-principle lower bound holds when this is >= -O(h).
double lower_bound_check(const ObstacleSolution& vbar, const Index3& k, double alpha,
                         double gamma_k);

} // namespace perfhom
