#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfhom/grid.hpp"

namespace perfhom {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class MediumLaw { constant, iid_uniform, bernoulli_dilution, moving_average, shifted_periodic };
enum class ShapeKind { ball, box, point };

// Law of the per-site capacity process gamma(k, omega). omega is a 64-bit
// seed; gamma(k) is a fixed function of (seed, k) through a SplitMix64-style
// counter hash, so shifting the lattice is literally adding k' before
// hashing. That makes stationarity exact and shift checks deterministic.
struct MediumConfig {
  int dim = 2;
  MediumLaw law = MediumLaw::constant;

  double gamma = 0;                 // constant / bernoulli_dilution level
  double gamma_lo = 0, gamma_hi = 0; // iid_uniform and moving_average base
  double p_empty = 0;               // bernoulli_dilution
  int ma_range = 1;                 // moving_average box window [-L, L]^n
  std::vector<double> ma_weights;   // optional, flattened (2L+1)^n, x fastest
  int period = 2;                   // shifted_periodic
  std::vector<double> pattern;      // flattened period^n, x fastest

  double gamma_bar = 0;             // hard cap, required > 0
  std::optional<double> gamma_lower;
  double envelope_M = 0;            // Assumption-1 envelope constant (0 = skip check)
  ShapeKind shape_kind = ShapeKind::ball;

  void validate() const; // throws ConfigError naming the offending field
  double max_gamma() const;
};

// Integer lattice box [lo, hi) per axis.
struct LatticeBox {
  int dim = 2;
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 1};

  Index3 sides() const {
    return {hi[0] - lo[0], hi[1] - lo[1], dim == 3 ? hi[2] - lo[2] : 1};
  }
  std::int64_t num_sites() const {
    const Index3 s = sides();
    return std::int64_t(s[0]) * s[1] * s[2];
  }
  bool contains(const Index3& k) const {
    for (int a = 0; a < dim; ++a)
      if (k[a] < lo[a] || k[a] >= hi[a]) return false;
    return true;
  }
  std::int64_t offset(const Index3& k) const {
    const Index3 s = sides();
    const int kz = dim == 3 ? k[2] - lo[2] : 0;
    return (std::int64_t(kz) * s[1] + (k[1] - lo[1])) * s[0] + (k[0] - lo[0]);
  }
};

struct GammaField {
  MediumConfig config;
  std::uint64_t seed = 0;
  LatticeBox window;
  std::vector<double> values;

  double at(const Index3& k) const { return values[size_t(window.offset(k))]; }
};

GammaField sample_gamma_field(const MediumConfig& config, std::uint64_t seed,
                              const LatticeBox& window);

// Exact check of gamma(k + k') == gamma(k, tau_{k'} omega) on the window
// overlap, where the shifted environment composes k' into the hash argument.
bool shift_consistency(const GammaField& field, const Index3& kprime);

// Lattice-unit ball radius whose capacity is gamma; 0 maps to 0.
double radius_from_gamma(double gamma, int n);

// Physical hole radius at scale eps: r eps^(n/(n-2)) for n >= 3,
// exp(-1/(r eps^2)) for n = 2.
double hole_radius_eps(double r, double eps, int n);

enum class HoleMode { resolved, point, automatic };

struct HoleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Realized holes of one eps-level, rasterized on a grid over D.
struct HoleField {
  GammaField gamma;
  double eps = 0;
  ShapeKind shape_kind = ShapeKind::ball;
  std::vector<std::pair<Index3, NodeSet>> holes; // lattice site -> discrete S_eps(k)
  NodeSet t_eps;                                 // union of all holes
  // Point-mode sites carry the discrete capacity of their single node.
  std::vector<std::pair<Index3, double>> calibrated_gamma;

  std::size_t num_holes() const { return holes.size(); }
};

// Rasterizes every hole S_eps(k) with center eps*k on the given grid.
// resolved mode requires the hole radius to span >= 2 cells; point mode
// collapses holes to single calibrated nodes; automatic picks per hole.
HoleField build_holes(const GammaField& gamma, double eps, const GridSpec& domain,
                      HoleMode mode);

// SplitMix64 finalizer; the documented per-site hash is
//   mix(mix(mix(seed ^ STREAM) + k0) + k1) + k2  mapped through the law.
std::uint64_t splitmix64(std::uint64_t x);
double u01_from_bits(std::uint64_t bits);

} // namespace perfhom
