#include "perfhom/random_media.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perfhom/capacity.hpp"

namespace perfhom {

namespace {

constexpr std::uint64_t kStreamSite = 0x7065726668686f6dULL;
constexpr std::uint64_t kStreamBase = 0x6261736566696c64ULL;
constexpr std::uint64_t kStreamPhase = 0x7068617365746167ULL;

std::uint64_t site_bits(std::uint64_t seed, const Index3& k, int dim, std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed ^ stream);
  h = splitmix64(h + std::uint64_t(std::int64_t(k[0])));
  h = splitmix64(h + std::uint64_t(std::int64_t(k[1])));
  if (dim == 3) h = splitmix64(h + std::uint64_t(std::int64_t(k[2])));
  return h;
}

int imod(int a, int p) { return ((a % p) + p) % p; }

struct LawSampler {
  const MediumConfig& cfg;
  std::uint64_t seed;
  Index3 phase{0, 0, 0};

  explicit LawSampler(const MediumConfig& c, std::uint64_t s) : cfg(c), seed(s) {
    if (cfg.law == MediumLaw::shifted_periodic) {
      for (int a = 0; a < cfg.dim; ++a)
        phase[a] = int(splitmix64(seed ^ (kStreamPhase + std::uint64_t(a))) %
                       std::uint64_t(cfg.period));
    }
  }

  double base_uniform(const Index3& k) const {
    const double u = u01_from_bits(site_bits(seed, k, cfg.dim, kStreamBase));
    return cfg.gamma_lo + u * (cfg.gamma_hi - cfg.gamma_lo);
  }

  double operator()(const Index3& k) const {
    switch (cfg.law) {
      case MediumLaw::constant:
        return cfg.gamma;
      case MediumLaw::iid_uniform: {
        const double u = u01_from_bits(site_bits(seed, k, cfg.dim, kStreamSite));
        return cfg.gamma_lo + u * (cfg.gamma_hi - cfg.gamma_lo);
      }
      case MediumLaw::bernoulli_dilution: {
        const double u = u01_from_bits(site_bits(seed, k, cfg.dim, kStreamSite));
        return u < cfg.p_empty ? 0.0 : cfg.gamma;
      }
      case MediumLaw::moving_average: {
        const int L = cfg.ma_range;
        const int w = 2 * L + 1;
        double acc = 0;
        std::size_t widx = 0;
        const int zlo = cfg.dim == 3 ? -L : 0, zhi = cfg.dim == 3 ? L : 0;
        const double uniform_w =
            1.0 / (cfg.dim == 3 ? double(w) * w * w : double(w) * w);
        for (int dz = zlo; dz <= zhi; ++dz)
          for (int dy = -L; dy <= L; ++dy)
            for (int dx = -L; dx <= L; ++dx, ++widx) {
              const double wj = cfg.ma_weights.empty() ? uniform_w : cfg.ma_weights[widx];
              acc += wj * base_uniform({k[0] + dx, k[1] + dy, k[2] + dz});
            }
        const double lo = cfg.gamma_lower.value_or(0.0);
        return std::min(cfg.gamma_bar, std::max(lo, acc));
      }
      case MediumLaw::shifted_periodic: {
        const int p = cfg.period;
        const int ix = imod(k[0] + phase[0], p);
        const int iy = imod(k[1] + phase[1], p);
        const int iz = cfg.dim == 3 ? imod(k[2] + phase[2], p) : 0;
        return cfg.pattern[size_t((std::int64_t(iz) * p + iy) * p + ix)];
      }
    }
    return 0;
  }
};

GammaField sample_with_offset(const MediumConfig& config, std::uint64_t seed,
                              const LatticeBox& window, const Index3& offset) {
  config.validate();
  if (window.num_sites() <= 0) throw ConfigError("window: must be nonempty");
  GammaField f;
  f.config = config;
  f.seed = seed;
  f.window = window;
  f.values.assign(size_t(window.num_sites()), 0.0);
  LawSampler law(config, seed);
  const Index3 s = window.sides();
  for (int kz = 0; kz < s[2]; ++kz)
    for (int ky = 0; ky < s[1]; ++ky)
      for (int kx = 0; kx < s[0]; ++kx) {
        const Index3 k{window.lo[0] + kx, window.lo[1] + ky,
                       config.dim == 3 ? window.lo[2] + kz : 0};
        const Index3 shifted{k[0] + offset[0], k[1] + offset[1], k[2] + offset[2]};
        f.values[size_t(window.offset(k))] = law(shifted);
      }
  return f;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double u01_from_bits(std::uint64_t bits) {
  return double(bits >> 11) * 0x1.0p-53;
}

void MediumConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim: must be 2 or 3");
  if (!(gamma_bar > 0)) throw ConfigError("gamma_bar: must be positive");
  if (gamma_lower && (*gamma_lower < 0 || *gamma_lower > gamma_bar))
    throw ConfigError("gamma_lower: must lie in [0, gamma_bar]");
  if (envelope_M < 0) throw ConfigError("envelope_M: must be >= 0");
  const double glow = gamma_lower.value_or(0.0);
  switch (law) {
    case MediumLaw::constant:
      if (gamma < 0 || gamma > gamma_bar)
        throw ConfigError("gamma: constant law requires 0 <= gamma <= gamma_bar");
      if (gamma < glow) throw ConfigError("gamma: below gamma_lower");
      break;
    case MediumLaw::iid_uniform:
      if (gamma_lo < 0 || gamma_hi < gamma_lo || gamma_hi > gamma_bar)
        throw ConfigError("gamma_lo/gamma_hi: need 0 <= lo <= hi <= gamma_bar");
      if (gamma_lo < glow) throw ConfigError("gamma_lo: below gamma_lower");
      break;
    case MediumLaw::bernoulli_dilution:
      if (p_empty < 0 || p_empty > 1) throw ConfigError("p_empty: must lie in [0, 1]");
      if (gamma < 0 || gamma > gamma_bar)
        throw ConfigError("gamma: dilution level must lie in [0, gamma_bar]");
      if (p_empty > 0 && glow > 0)
        throw ConfigError("gamma_lower: incompatible with p_empty > 0");
      break;
    case MediumLaw::moving_average: {
      if (ma_range < 1) throw ConfigError("ma_range: must be >= 1");
      // The base law may exceed gamma_bar; the post-convolution clamp
      // enforces the cap.
      if (gamma_lo < 0 || gamma_hi < gamma_lo)
        throw ConfigError("gamma_lo/gamma_hi: need 0 <= lo <= hi");
      const int w = 2 * ma_range + 1;
      const std::size_t need = dim == 3 ? size_t(w) * w * w : size_t(w) * w;
      if (!ma_weights.empty() && ma_weights.size() != need)
        throw ConfigError("ma_weights: need (2L+1)^n entries");
      for (double wj : ma_weights)
        if (wj < 0) throw ConfigError("ma_weights: must be >= 0");
      break;
    }
    case MediumLaw::shifted_periodic: {
      if (period < 1) throw ConfigError("period: must be >= 1");
      const std::size_t need =
          dim == 3 ? size_t(period) * period * period : size_t(period) * period;
      if (pattern.size() != need) throw ConfigError("pattern: need period^n entries");
      for (double v : pattern) {
        if (v < 0 || v > gamma_bar) throw ConfigError("pattern: values must lie in [0, gamma_bar]");
        if (v < glow) throw ConfigError("pattern: value below gamma_lower");
      }
      break;
    }
  }
}

double MediumConfig::max_gamma() const {
  switch (law) {
    case MediumLaw::constant: return gamma;
    case MediumLaw::iid_uniform: return gamma_hi;
    case MediumLaw::bernoulli_dilution: return gamma;
    case MediumLaw::moving_average: return std::min(gamma_bar, gamma_hi);
    case MediumLaw::shifted_periodic:
      return pattern.empty() ? 0.0 : *std::max_element(pattern.begin(), pattern.end());
  }
  return 0;
}

GammaField sample_gamma_field(const MediumConfig& config, std::uint64_t seed,
                              const LatticeBox& window) {
  return sample_with_offset(config, seed, window, {0, 0, 0});
}

bool shift_consistency(const GammaField& field, const Index3& kprime) {
  const LatticeBox& w = field.window;
  const GammaField shifted = sample_with_offset(field.config, field.seed, w, kprime);
  const Index3 s = w.sides();
  for (int kz = 0; kz < s[2]; ++kz)
    for (int ky = 0; ky < s[1]; ++ky)
      for (int kx = 0; kx < s[0]; ++kx) {
        const Index3 k{w.lo[0] + kx, w.lo[1] + ky, field.config.dim == 3 ? w.lo[2] + kz : 0};
        const Index3 kp{k[0] + kprime[0], k[1] + kprime[1],
                        field.config.dim == 3 ? k[2] + kprime[2] : 0};
        if (!w.contains(kp)) continue;
        if (field.at(kp) != shifted.at(k)) return false;
      }
  return true;
}

double radius_from_gamma(double gamma, int n) {
  if (n != 2 && n != 3) throw std::invalid_argument("radius_from_gamma: n must be 2 or 3");
  if (gamma < 0) throw std::invalid_argument("radius_from_gamma: gamma must be >= 0");
  if (gamma == 0) return 0;
  if (n == 2) return gamma / (2.0 * M_PI);
  return gamma / (4.0 * M_PI); // (gamma / (n(n-2) omega_n))^(1/(n-2)), n = 3
}

double hole_radius_eps(double r, double eps, int n) {
  if (n != 2 && n != 3) throw std::invalid_argument("hole_radius_eps: n must be 2 or 3");
  if (!(eps > 0) || eps > 1) throw std::invalid_argument("hole_radius_eps: eps must lie in (0, 1]");
  if (r < 0) throw std::invalid_argument("hole_radius_eps: r must be >= 0");
  if (r == 0) return 0;
  if (n == 2) return std::exp(-1.0 / (r * eps * eps));
  return r * eps * eps * eps; // r eps^(n/(n-2)), n = 3
}

HoleField build_holes(const GammaField& gamma, double eps, const GridSpec& domain,
                      HoleMode mode) {
  const MediumConfig& cfg = gamma.config;
  const int n = cfg.dim;
  if (domain.dim != n) throw HoleError("build_holes: grid dimension mismatch");
  if (!(eps > 0) || eps >= 1) throw HoleError("build_holes: eps must lie in (0, 1)");
  if (domain.h > eps / 4 + 1e-12)
    throw HoleError("build_holes: need h <= eps/4 (at least 4 cells per lattice cell)");

  HoleField hf;
  hf.gamma = gamma;
  hf.eps = eps;
  hf.shape_kind = cfg.shape_kind;
  hf.t_eps.spec = domain;

  double node_cap = -1; // computed on first point-mode hole

  Index3 klo{0, 0, 0}, khi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    klo[a] = int(std::ceil((domain.origin[a] - 1e-9 * eps) / eps));
    khi[a] = int(std::floor((domain.origin[a] + domain.extent[a] + 1e-9 * eps) / eps));
  }

  for (int kz = (n == 3 ? klo[2] : 0); kz <= (n == 3 ? khi[2] : 0); ++kz)
    for (int ky = klo[1]; ky <= khi[1]; ++ky)
      for (int kx = klo[0]; kx <= khi[0]; ++kx) {
        const Index3 k{kx, ky, kz};
        if (!gamma.window.contains(k))
          throw HoleError("build_holes: gamma window does not cover the domain lattice");
        const double gk = gamma.at(k);
        if (gk <= 0) continue;

        const double r = radius_from_gamma(gk, n);
        const double a = hole_radius_eps(r, eps, n);

        if (cfg.envelope_M > 0) {
          const bool ok = n == 3 ? r <= cfg.envelope_M * (1 + 1e-12)
                                 : r * cfg.envelope_M <= 1 + 1e-12;
          if (!ok)
            throw HoleError("build_holes: Assumption-1 envelope violated at a lattice site");
        }
        if (!(a < eps / 2))
          throw HoleError("build_holes: hole radius reaches eps/2 (containment violated)");

        const Vec3 center{eps * kx, eps * ky, n == 3 ? eps * kz : 0.0};
        const bool resolved_ok = a >= 2 * domain.h;
        bool as_point = cfg.shape_kind == ShapeKind::point || mode == HoleMode::point;
        if (!as_point && !resolved_ok) {
          if (mode == HoleMode::resolved)
            throw HoleError("build_holes: unresolvable hole in resolved mode (a < 2h)");
          as_point = true; // automatic
        }

        NodeSet nodes;
        if (as_point) {
          ShapeSpec point_ball = ShapeSpec::ball(std::min(a, 0.49 * domain.h));
          nodes = rasterize_shape(point_ball, center, domain);
          if (node_cap < 0) node_cap = discrete_node_capacity(domain.h, n);
          hf.calibrated_gamma.emplace_back(k, node_cap);
        } else if (cfg.shape_kind == ShapeKind::ball) {
          nodes = rasterize_shape(ShapeSpec::ball(a), center, domain);
        } else {
          const double w = equivalent_cube_half_width(a, n);
          nodes = rasterize_shape(ShapeSpec::box({w, w, n == 3 ? w : 0.0}), center, domain);
        }

        // Assumption invariant: every node within eps/2 of the center.
        for (std::int64_t idx : nodes.members) {
          const Vec3 p = domain.node_pos(idx);
          double d2 = 0;
          for (int a2 = 0; a2 < n; ++a2) d2 += (p[a2] - center[a2]) * (p[a2] - center[a2]);
          if (d2 > (eps / 2) * (eps / 2) * (1 + 1e-9))
            throw HoleError("build_holes: rasterized node escapes B_{eps/2}(eps k)");
        }

        hf.holes.emplace_back(k, std::move(nodes));
      }

  // Union, checking pairwise disjointness.
  std::size_t total = 0;
  for (const auto& [k, ns] : hf.holes) total += ns.members.size();
  hf.t_eps.members.reserve(total);
  for (const auto& [k, ns] : hf.holes)
    hf.t_eps.members.insert(hf.t_eps.members.end(), ns.members.begin(), ns.members.end());
  std::sort(hf.t_eps.members.begin(), hf.t_eps.members.end());
  for (std::size_t i = 1; i < hf.t_eps.members.size(); ++i)
    if (hf.t_eps.members[i] == hf.t_eps.members[i - 1])
      throw HoleError("build_holes: holes overlap on the grid");
  return hf;
}

} // namespace perfhom
