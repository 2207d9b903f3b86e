#include "perfhom/effective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace perfhom {

namespace {

constexpr std::uint64_t kEllStream = 0x656c6c5f73747265ULL;

std::uint64_t sub_seed(std::uint64_t seed, int t_index, int sample, int salt) {
  std::uint64_t h = splitmix64(seed ^ kEllStream);
  h = splitmix64(h + std::uint64_t(t_index) * 1000003ULL);
  h = splitmix64(h + std::uint64_t(sample));
  h = splitmix64(h + std::uint64_t(salt) * 7919ULL);
  return h;
}

// Contact fraction of the interior nodes of [margin, t-margin]^n.
double inner_contact_ratio(const ObstacleSolution& sol, int t, int margin) {
  const GridSpec& g = sol.field.spec;
  const double lo = margin, hi = t - margin;
  std::int64_t total = 0, hit = 0;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (sol.field.mask[size_t(idx)] != 0) continue;
    const Vec3 p = g.node_pos(idx);
    bool in = true;
    for (int a = 0; a < g.dim; ++a)
      if (p[a] < lo - 1e-12 || p[a] > hi + 1e-12) in = false;
    if (!in) continue;
    ++total;
    hit += sol.contact[size_t(idx)];
  }
  return total > 0 ? double(hit) / double(total) : 0.0;
}

void run_jobs(int njobs, int workers, const std::function<void(int)>& job) {
  if (workers <= 1) {
    for (int i = 0; i < njobs; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int nw = std::min(workers, njobs);
  pool.reserve(size_t(nw));
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < njobs; i = next.fetch_add(1)) job(i);
    });
  for (auto& th : pool) th.join();
}

struct EllStats {
  double mean = 0, ci = 0;
};

EllStats mean_ci(const std::vector<double>& xs) {
  EllStats s;
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    const double sd = std::sqrt(ss / double(xs.size() - 1));
    s.ci = 1.96 * sd / std::sqrt(double(xs.size()));
  }
  return s;
}

} // namespace

double contact_measure(const ObstacleSolution& sol) {
  const GridSpec& g = sol.field.spec;
  std::int64_t hit = 0;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx)
    if (sol.field.mask[size_t(idx)] == 0 && sol.contact[size_t(idx)] != 0) ++hit;
  return g.cell_volume() * double(hit);
}

EllEstimate estimate_ell(double alpha, const MediumConfig& config, const EllParams& params,
                         std::uint64_t seed, int workers) {
  config.validate();
  if (params.t_list.empty()) throw ConfigError("t_list: must be nonempty");
  for (std::size_t i = 1; i < params.t_list.size(); ++i)
    if (params.t_list[i] <= params.t_list[i - 1])
      throw ConfigError("t_list: window sizes must be increasing");
  if (params.samples < 1) throw ConfigError("samples: must be >= 1");
  if (params.m < 4) throw ConfigError("cells_per_unit: must be >= 4");

  EllEstimate est;
  est.alpha = alpha;
  est.window_sizes = params.t_list;
  est.cells_per_unit = params.m;
  est.ratios.assign(params.t_list.size(), std::vector<double>(size_t(params.samples), 0.0));

  struct Job {
    int ti, sample;
  };
  std::vector<Job> jobs;
  for (int ti = 0; ti < int(params.t_list.size()); ++ti)
    for (int s = 0; s < params.samples; ++s) jobs.push_back({ti, s});

  std::vector<std::string> failures(jobs.size());
  run_jobs(int(jobs.size()), workers, [&](int j) {
    const auto [ti, s] = jobs[size_t(j)];
    const int t = params.t_list[size_t(ti)];
    try {
      const GridSpec window = GridSpec::window(config.dim, t, params.m);
      LatticeBox box;
      box.dim = config.dim;
      box.lo = {0, 0, 0};
      box.hi = {t + 1, t + 1, config.dim == 3 ? t + 1 : 1};
      const GammaField gamma =
          sample_gamma_field(config, sub_seed(seed, ti, s, 0), box);
      const ObstacleSolution sol = solve_auxiliary(alpha, window, gamma, params.psor);
      est.ratios[size_t(ti)][size_t(s)] =
          inner_contact_ratio(sol, t, std::min(params.margin, (t - 1) / 2));
    } catch (const std::exception& e) {
      failures[size_t(j)] = e.what();
    }
  });
  for (const auto& f : failures)
    if (!f.empty()) throw SolverError("estimate_ell: inner solve failed: " + f, 0);

  est.trend_means.reserve(params.t_list.size());
  for (const auto& row : est.ratios) est.trend_means.push_back(mean_ci(row).mean);
  const EllStats top = mean_ci(est.ratios.back());
  est.ell_hat = top.mean;
  est.ci_halfwidth = top.ci;
  return est;
}

double subadditivity_check(double alpha, const LatticeBox& window,
                           const std::vector<LatticeBox>& partition,
                           const MediumConfig& config, int m, std::uint64_t seed) {
  config.validate();
  // The parts must tile the window exactly.
  std::int64_t vol = 0;
  for (const auto& p : partition) {
    for (int a = 0; a < config.dim; ++a)
      if (p.lo[a] < window.lo[a] || p.hi[a] > window.hi[a])
        throw ConfigError("partition: box leaves the window");
    vol += p.num_sites();
  }
  if (vol != window.num_sites()) throw ConfigError("partition: does not tile the window");
  for (std::size_t i = 0; i < partition.size(); ++i)
    for (std::size_t j = i + 1; j < partition.size(); ++j) {
      bool overlap = true;
      for (int a = 0; a < config.dim; ++a)
        if (partition[i].hi[a] <= partition[j].lo[a] || partition[j].hi[a] <= partition[i].lo[a])
          overlap = false;
      if (overlap) throw ConfigError("partition: boxes overlap");
    }

  auto solve_box = [&](const LatticeBox& b) {
    const Index3 sides = b.sides();
    for (int a = 1; a < config.dim; ++a)
      if (sides[a] != sides[0])
        throw ConfigError("subadditivity_check: boxes must be cubes"); // windows are cubes
    const int t = sides[0];
    GridSpec g = GridSpec::make(
        config.dim, {double(b.lo[0]), double(b.lo[1]), config.dim == 3 ? double(b.lo[2]) : 0.0},
        {double(t), double(t), config.dim == 3 ? double(t) : 0.0},
        {t * m + 1, t * m + 1, config.dim == 3 ? t * m + 1 : 1});
    LatticeBox sites;
    sites.dim = config.dim;
    for (int a = 0; a < config.dim; ++a) {
      sites.lo[a] = b.lo[a];
      sites.hi[a] = b.hi[a] + 1;
    }
    if (config.dim == 2) { sites.lo[2] = 0; sites.hi[2] = 1; }
    const GammaField gamma = sample_gamma_field(config, seed, sites);
    return contact_measure(solve_auxiliary(alpha, g, gamma));
  };

  LatticeBox full = window;
  // Interpreting the lattice box [lo,hi) as the cube [lo, hi] of side hi-lo.
  const Index3 ws = window.sides();
  for (int a = 1; a < config.dim; ++a)
    if (ws[a] != ws[0]) throw ConfigError("subadditivity_check: window must be a cube");

  double sum_parts = 0;
  for (const auto& p : partition) sum_parts += solve_box(p);
  const double whole = solve_box(full);
  return sum_parts - whole;
}

std::pair<double, double> alpha0_bracket(const MediumConfig& config, int n) {
  const double r_bar = radius_from_gamma(config.gamma_bar, n);
  const double r_low = radius_from_gamma(config.gamma_lower.value_or(0.0), n);
  if (n == 2) return {0.0, 8.0 * r_bar};
  const double lo = n * (n - 2) * r_low; // r^(n-2), n = 3
  const double hi = std::pow(2.0, n) * n * (n - 2) * r_bar;
  return {lo, hi};
}

Alpha0Estimate estimate_alpha0(const MediumConfig& config, const Alpha0Params& params,
                               std::uint64_t seed, int workers) {
  config.validate();
  const int n = config.dim;
  auto [lo, hi] = alpha0_bracket(config, n);
  if (!(hi > lo)) throw ConfigError("estimate_alpha0: empty bracket");

  Alpha0Estimate est;
  est.theta = params.theta;
  const double width_target = params.rtol * hi;
  int evals = 0;

  while (hi - lo > width_target) {
    if (evals >= params.max_evals) {
      est.widened = true;
      break;
    }
    const double mid = 0.5 * (lo + hi);
    EllParams ep = params.ell;
    EllEstimate e = estimate_ell(mid, config, ep, seed, workers);
    ++evals;
    Alpha0TraceEntry entry;
    entry.alpha = mid;
    entry.ell_hat = e.ell_hat;
    entry.ci = e.ci_halfwidth;
    int verdict = 0;
    if (e.ell_hat - e.ci_halfwidth > params.theta) verdict = +1;
    else if (e.ell_hat + e.ci_halfwidth < params.theta) verdict = -1;
    if (verdict == 0) {
      // One retry with doubled sampling before the conservative step.
      ep.samples *= 2;
      e = estimate_ell(mid, config, ep, splitmix64(seed ^ 0xA5A5A5A5ULL), workers);
      ++evals;
      entry.retried = true;
      entry.ell_hat = e.ell_hat;
      entry.ci = e.ci_halfwidth;
      if (e.ell_hat - e.ci_halfwidth > params.theta) verdict = +1;
      else if (e.ell_hat + e.ci_halfwidth < params.theta) verdict = -1;
    }
    entry.verdict = verdict;
    est.trace.push_back(entry);
    if (verdict == +1 || verdict == 0) hi = mid; // ambiguity resolved conservatively
    else lo = mid;
  }
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  est.alpha0 = 0.5 * (lo + hi);
  return est;
}

double mean_value_check(const ScalarField& v, double alpha,
                        const std::vector<MeanValueSample>& samples) {
  const GridSpec& g = v.spec;
  const int n = g.dim;
  const ScalarField lap = laplacian_apply(v);
  const double cn = 1.0 / (2.0 * (n + 2));
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    Index3 c{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      c[a] = int(std::lround((s.y0[a] - g.origin[a]) / g.h));
      if (c[a] < 0 || c[a] >= g.nodes[a])
        throw std::invalid_argument("mean_value_check: center outside grid");
    }
    const Vec3 y{g.pos(0, c[0]), g.pos(1, c[1]), n == 3 ? g.pos(2, c[2]) : 0.0};
    double acc = 0;
    std::int64_t cnt = 0;
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      const Vec3 p = g.node_pos(idx);
      double d2 = 0;
      for (int a = 0; a < n; ++a) d2 += (p[a] - y[a]) * (p[a] - y[a]);
      if (d2 > s.r * s.r * (1 + 1e-12)) continue;
      if (v.mask[size_t(idx)] == 0 &&
          lap.values[size_t(idx)] > alpha + 1e-7 * (1 + std::abs(alpha)))
        throw std::invalid_argument("mean_value_check: lap v <= alpha violated on a sample ball");
      acc += v.values[size_t(idx)];
      ++cnt;
    }
    if (cnt == 0) continue;
    const double avg = acc / double(cnt);
    const double v0 = v.values[size_t(g.index(c[0], c[1], c[2]))];
    worst = std::max(worst, avg - v0 - alpha * cn * s.r * s.r);
  }
  return worst;
}

} // namespace perfhom
