#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "perfhom/obstacle.hpp"

namespace perfhom {

// h^n times the number of interior contact nodes.
double contact_measure(const ObstacleSolution& sol);

struct EllParams {
  std::vector<int> t_list; // increasing cube sides, lattice units
  int m = 8;               // cells per unit
  int samples = 16;
  // Lattice-unit strip excluded from the contact count. The window boundary
  // forces v = 0 nearby at any alpha > 0; counting only the inner box
  // [margin, t-margin]^n estimates the same limit (the density localizes)
  // without the O(1/t) wall-layer bias.
  int margin = 1;
  PsorOptions psor{};
};

struct EllEstimate {
  double alpha = 0;
  std::vector<int> window_sizes;
  std::vector<std::vector<double>> ratios; // [t][sample], each in [0,1]
  int cells_per_unit = 0;
  double ell_hat = 0;      // mean ratio at the largest window
  double ci_halfwidth = 0; // 1.96 * stderr at the largest window
  std::vector<double> trend_means; // per-t means, diagnostics only
};

EllEstimate estimate_ell(double alpha, const MediumConfig& config, const EllParams& params,
                         std::uint64_t seed, int workers = 1);

// Sum_i m(A_i) - m(A) over a tiling of the window; subadditivity makes this
// >= 0 up to solver tolerance. Boxes are lattice-aligned cubes/boxes.
double subadditivity_check(double alpha, const LatticeBox& window,
                           const std::vector<LatticeBox>& partition,
                           const MediumConfig& config, int m, std::uint64_t seed);

// (lo, hi) containment for alpha0: lo = n(n-2) r_lower^(n-2) for n >= 3
// (0 when n = 2 or gamma_lower unset), hi = 2^n n(n-2) r_bar^(n-2)
// (8 r_bar for n = 2), radii via radius_from_gamma of gamma_lower/gamma_bar.
std::pair<double, double> alpha0_bracket(const MediumConfig& config, int n);

struct Alpha0TraceEntry {
  double alpha = 0;
  double ell_hat = 0;
  double ci = 0;
  int verdict = 0; // +1 positive, -1 zero, 0 ambiguous (conservative step)
  bool retried = false;
};

struct Alpha0Params {
  EllParams ell{};
  double theta = 0.005; // declare ell > 0 when ell_hat - ci > theta
  double rtol = 0.1;    // stop at bracket width <= rtol * initial hi
  int max_evals = 20;
};

struct Alpha0Estimate {
  double bracket_lo = 0, bracket_hi = 0; // final bracket
  std::vector<Alpha0TraceEntry> trace;
  double alpha0 = 0;
  double theta = 0;
  bool widened = false; // budget exhausted with ambiguous cells
};

Alpha0Estimate estimate_alpha0(const MediumConfig& config, const Alpha0Params& params,
                               std::uint64_t seed, int workers = 1);

// Worst slack of the mean-value bound: ball average - v(y0) - alpha C(n) r^2
// with C(n) = 1/(2(n+2)), over the given (center, radius) samples. Centers
// snap to the nearest node; requires lap v <= alpha on each sampled ball.
struct MeanValueSample {
  Vec3 y0;
  double r = 0;
};
double mean_value_check(const ScalarField& v, double alpha,
                        const std::vector<MeanValueSample>& samples);

} // namespace perfhom
