#pragma once

#include <vector>

#include "perfhom/grid.hpp"
#include "perfhom/linsolve.hpp"

namespace perfhom {

struct CapacityResult {
  enum class Method { closed_form, variational, discrete_node };
  double value = 0;
  Method method = Method::variational;
  double resolution = 0; // grid spacing used
  double residual = 0;   // inner solver residual
};

// cap(B_r): n(n-2) omega_n r^(n-2) for n >= 3; -2pi/log r for n = 2 (taken
// relative to B_1, so r must lie in (0,1)).
double cap_ball(double r, int n);

struct CapParams {
  // n = 3: monopole far-field passes after the first zero-Dirichlet solve.
  // Pass 1 measures the capacity; later passes impose gamma*h(x) on the
  // outer box, removing the O(shape/box) truncation bias.
  int bc_passes = 3;
  LinearSolveOptions lin{};
};

// Minimal Dirichlet energy of the equilibrium potential (= 1 on the shape,
// 0 at the far boundary). n = 3 truncates decay-at-infinity to a box of
// half-width box_radius; n = 2 is exactly the B_1-relative capacity and
// ignores box_radius.
CapacityResult cap_variational(const ShapeSpec& shape, int n, double box_radius, double h,
                               const CapParams& params = {});

// The n = 3 equilibrium potential itself, harmonic off the shape, = 1 on it.
// Returns the potential; capacity/flux diagnostics via the helpers below.
ScalarField equilibrium_potential(const ShapeSpec& shape, int n, double box_radius, double h,
                                  CapacityResult* cap_out = nullptr,
                                  const CapParams& params = {});

// Discrete flux of phi through the cube shell |x - center|_inf = shell_radius
// (sum of stencil differences across the shell faces). For a potential with
// charge only inside the shell this equals the capacity exactly.
double shell_flux(const ScalarField& phi, const Vec3& center, double shell_radius);

struct FarfieldProfile {
  std::vector<double> rho;
  std::vector<double> deviation; // sup over |x| = rho of |phi/(gamma h) - 1|
  double decay_exponent = 0;     // least-squares slope of log dev vs log rho
  bool truncation_warning = false;
};

// Deviation profile of phi from the monopole gamma*h(x); gamma must be the
// measured capacity of the same shape. Radii run from 2M to half the box.
FarfieldProfile farfield_check(const ScalarField& phi, double gamma, double M);

// Capacity of a single grid node at spacing h: ~ c h in n = 3 and
// ~ 2 pi / |log h| in n = 2. Used to calibrate point-mode holes.
double discrete_node_capacity(const GridSpec& spec, int n);
double discrete_node_capacity(double h, int n);

// Half-width of the axis-aligned cube with the same capacity as a ball of
// radius a (far-field equivalence). The cube/ball radius ratio is measured
// once per dimension with cap_variational and cached.
double equivalent_cube_half_width(double a, int n);

// Fundamental solution h(|x|) of -lap h = delta: 1/(n(n-2) omega_n |x|^(n-2))
// for n >= 3, -(1/2pi) log |x| for n = 2.
double fundamental_solution(double rho, int n);

} // namespace perfhom
