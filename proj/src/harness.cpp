#include "perfhom/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "perfhom/capacity.hpp"
#include "perfhom/corrector.hpp"
#include "perfhom/effective.hpp"
#include "perfhom/homogenize.hpp"
#include "perfhom/io.hpp"
#include "perfhom/obstacle.hpp"

namespace perfhom {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json version_stamp() {
  json v;
  v["name"] = "perfhom";
  v["version"] = kVersion;
  return v;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(size_t(count));
  for (int i = 0; i < count; ++i)
    seeds.push_back(splitmix64(seed ^ (0xC0FFEEULL + std::uint64_t(i))));
  return seeds;
}

EllParams ell_params(const RunConfig& cfg) {
  EllParams ep;
  ep.t_list = cfg.experiment.t_list;
  ep.m = cfg.experiment.cells_per_unit;
  ep.samples = cfg.experiment.samples;
  ep.margin = cfg.experiment.margin;
  return ep;
}

double resolve_alpha0(const RunConfig& cfg, Report& rep) {
  if (cfg.experiment.alpha0) return *cfg.experiment.alpha0;
  Alpha0Params ap;
  ap.ell = ell_params(cfg);
  ap.theta = cfg.experiment.theta;
  ap.rtol = cfg.experiment.rtol;
  ap.max_evals = cfg.experiment.max_evals;
  const Alpha0Estimate est = estimate_alpha0(cfg.medium, ap, cfg.seed, cfg.workers);
  rep.warnings.push_back("alpha0 not pinned in config; estimated " + std::to_string(est.alpha0));
  rep.results["alpha0_estimate"] = {{"alpha0", est.alpha0},
                                    {"bracket", {est.bracket_lo, est.bracket_hi}},
                                    {"widened", est.widened}};
  return est.alpha0;
}

json ell_to_json(const EllEstimate& est) {
  json r;
  r["alpha"] = est.alpha;
  r["window_sizes"] = est.window_sizes;
  r["cells_per_unit"] = est.cells_per_unit;
  r["ell_hat"] = est.ell_hat;
  r["ci_halfwidth"] = est.ci_halfwidth;
  r["trend_means"] = est.trend_means;
  r["ratios"] = est.ratios;
  return r;
}

GammaField sample_covering_gamma(const MediumConfig& medium, std::uint64_t seed,
                                 const GridSpec& grid, double eps) {
  LatticeBox box;
  box.dim = medium.dim;
  for (int a = 0; a < medium.dim; ++a) {
    box.lo[a] = int(std::floor(grid.origin[a] / eps)) - 1;
    box.hi[a] = int(std::ceil((grid.origin[a] + grid.extent[a]) / eps)) + 2;
  }
  if (medium.dim == 2) {
    box.lo[2] = 0;
    box.hi[2] = 1;
  }
  return sample_gamma_field(medium, seed, box);
}

void run_capacity(const RunConfig& cfg, Report& rep) {
  const ShapeSpec& shape = cfg.experiment.shape;
  json res;
  if (cfg.dim == 3 && !shape.is_empty(3)) {
    CapacityResult cap;
    const ScalarField phi =
        equilibrium_potential(shape, 3, cfg.experiment.box_radius, cfg.experiment.h, &cap);
    res["value"] = cap.value;
    res["method"] = "variational";
    res["residual"] = cap.residual;
    res["resolution"] = cap.resolution;
    const double M = shape.bounding_radius(3);
    const FarfieldProfile prof = farfield_check(phi, cap.value, M);
    res["farfield"] = {{"rho", prof.rho},
                       {"deviation", prof.deviation},
                       {"decay_exponent", prof.decay_exponent},
                       {"truncation_warning", prof.truncation_warning}};
    if (cfg.experiment.dump_fields) rep.field_dumps.emplace_back("potential.field", phi);
  } else {
    const CapacityResult cap =
        cap_variational(shape, cfg.dim, cfg.experiment.box_radius, cfg.experiment.h);
    res["value"] = cap.value;
    res["method"] = shape.is_empty(cfg.dim) ? "closed_form" : "variational";
    res["residual"] = cap.residual;
    res["resolution"] = cap.resolution;
  }
  rep.results = std::move(res);
}

void run_ell(const RunConfig& cfg, Report& rep) {
  const EllEstimate est =
      estimate_ell(cfg.experiment.alpha, cfg.medium, ell_params(cfg), cfg.seed, cfg.workers);
  rep.results = ell_to_json(est);
}

void run_alpha0(const RunConfig& cfg, Report& rep) {
  Alpha0Params ap;
  ap.ell = ell_params(cfg);
  ap.theta = cfg.experiment.theta;
  ap.rtol = cfg.experiment.rtol;
  ap.max_evals = cfg.experiment.max_evals;
  const auto [blo, bhi] = alpha0_bracket(cfg.medium, cfg.dim);
  const Alpha0Estimate est = estimate_alpha0(cfg.medium, ap, cfg.seed, cfg.workers);
  json r;
  r["initial_bracket"] = {blo, bhi};
  r["bracket"] = {est.bracket_lo, est.bracket_hi};
  r["alpha0"] = est.alpha0;
  r["theta"] = est.theta;
  r["widened"] = est.widened;
  json trace = json::array();
  for (const auto& t : est.trace)
    trace.push_back({{"alpha", t.alpha},
                     {"ell_hat", t.ell_hat},
                     {"ci", t.ci},
                     {"verdict", t.verdict},
                     {"retried", t.retried}});
  r["trace"] = std::move(trace);
  if (est.widened)
    rep.warnings.push_back("bisection budget exhausted with ambiguous cells; bracket widened");
  rep.results = std::move(r);
}

void run_corrector(const RunConfig& cfg, Report& rep) {
  const double alpha0 = resolve_alpha0(cfg, rep);
  const GridSpec grid = GridSpec::unit_cube(cfg.dim, cfg.experiment.grid_nodes);
  std::vector<CorrectorRun> runs;
  json per_eps = json::array();
  for (double eps : cfg.experiment.eps_list) {
    const GammaField gamma = sample_covering_gamma(cfg.medium, cfg.seed, grid, eps);
    const HoleField holes = build_holes(gamma, eps, grid, cfg.experiment.hole_mode);
    runs.push_back(solve_corrector(eps, alpha0, holes, grid));
    const CorrectorRun& run = runs.back();
    json e;
    e["eps"] = eps;
    e["holes"] = run.holes.num_holes();
    e["l2"] = run.l2;
    e["h1_semi"] = run.h1_semi;
    json lp = json::array();
    for (const auto& [p, v] : run.lp) lp.push_back({{"p", p}, {"norm", v}});
    e["lp"] = std::move(lp);
    per_eps.push_back(std::move(e));
  }
  json r;
  r["alpha0"] = alpha0;
  r["per_eps"] = std::move(per_eps);
  if (runs.size() >= 3) {
    const NormScaling ns = norm_scaling(runs, cfg.experiment.p);
    r["p"] = cfg.experiment.p;
    r["slope"] = ns.slope;
    r["degenerate"] = ns.degenerate;
    r["log_ratio"] = ns.log_ratio;
  }
  if (runs.size() >= 2) {
    const H1Bound hb = h1_bound_check(runs);
    r["h1_max"] = hb.max_h1;
    r["h1_ratio"] = hb.ratio;
  }
  if (cfg.experiment.dump_fields && !runs.empty())
    rep.field_dumps.emplace_back("corrector_smallest_eps.field", runs.back().w);
  rep.results = std::move(r);
}

void run_solve_eps(const RunConfig& cfg, Report& rep) {
  const double eps = cfg.experiment.eps_list.front();
  const GridSpec grid = GridSpec::unit_cube(cfg.dim, cfg.experiment.grid_nodes);
  const GammaField gamma = sample_covering_gamma(cfg.medium, cfg.seed, grid, eps);
  const HoleField holes = build_holes(gamma, eps, grid, cfg.experiment.hole_mode);
  const std::vector<double> f(size_t(grid.num_nodes()), cfg.experiment.f_const);
  const ObstacleSolution sol = solve_eps_problem(f, holes, grid);
  json r;
  r["eps"] = eps;
  r["holes"] = holes.num_holes();
  r["energy_J"] = energy_J(sol.field, f);
  r["iterations"] = sol.iterations;
  r["residual"] = sol.residual;
  r["slack_residual"] = sol.slack_residual;
  r["contact_count"] = sol.contact_count();
  rep.results = std::move(r);
  if (cfg.experiment.dump_fields) rep.field_dumps.emplace_back("u_eps.field", sol.field);
}

void run_solve_aux(const RunConfig& cfg, Report& rep) {
  const int t = cfg.experiment.t_list.front();
  const GridSpec window = GridSpec::window(cfg.dim, t, cfg.experiment.cells_per_unit);
  LatticeBox box;
  box.dim = cfg.dim;
  box.lo = {0, 0, 0};
  box.hi = {t + 1, t + 1, cfg.dim == 3 ? t + 1 : 1};
  const GammaField gamma = sample_gamma_field(cfg.medium, cfg.seed, box);
  const ObstacleSolution sol = solve_auxiliary(cfg.experiment.alpha, window, gamma);
  json r;
  r["alpha"] = cfg.experiment.alpha;
  r["t"] = t;
  r["cells_per_unit"] = cfg.experiment.cells_per_unit;
  r["iterations"] = sol.iterations;
  r["residual"] = sol.residual;
  r["slack_residual"] = sol.slack_residual;
  r["contact_count"] = sol.contact_count();
  r["contact_measure"] = contact_measure(sol);
  rep.results = std::move(r);
  if (cfg.experiment.dump_fields) rep.field_dumps.emplace_back("v_aux.field", sol.field);
}

void run_solve_hom(const RunConfig& cfg, Report& rep) {
  const double alpha0 = cfg.experiment.alpha0 ? *cfg.experiment.alpha0 : resolve_alpha0(cfg, rep);
  const GridSpec grid = GridSpec::unit_cube(cfg.dim, cfg.experiment.grid_nodes);
  const std::vector<double> f(size_t(grid.num_nodes()), cfg.experiment.f_const);
  HomogenizedProblem hp{grid, f, alpha0};
  const ScalarField u = solve_homogenized(hp);
  json r;
  r["alpha0"] = alpha0;
  r["energy_J"] = energy_J(u, f);
  r["energy_J_alpha"] = energy_J_alpha(u, f, alpha0);
  double umin = 0, umax = 0;
  for (double v : u.values) {
    umin = std::min(umin, v);
    umax = std::max(umax, v);
  }
  r["min"] = umin;
  r["max"] = umax;
  rep.results = std::move(r);
  if (cfg.experiment.dump_fields) rep.field_dumps.emplace_back("u_bar.field", u);
}

void run_converge(const RunConfig& cfg, Report& rep) {
  const double alpha0 = resolve_alpha0(cfg, rep);
  const GridSpec grid = GridSpec::unit_cube(cfg.dim, cfg.experiment.grid_nodes);
  const std::vector<double> f(size_t(grid.num_nodes()), cfg.experiment.f_const);
  if (cfg.experiment.f_const >= 0)
    rep.warnings.push_back("obstacle inactive (f >= 0): u_eps equals the Poisson solution");
  ConvergenceParams params;
  params.mode = cfg.experiment.hole_mode;
  params.workers = cfg.workers;
  const std::vector<std::uint64_t> seeds = derive_seeds(cfg.seed, cfg.experiment.seeds);
  const ConvergenceReport conv = convergence_experiment(cfg.medium, f, cfg.experiment.eps_list,
                                                        alpha0, seeds, grid, params);
  json r;
  r["eps_list"] = conv.eps_list;
  r["alpha0_used"] = conv.alpha0_used;
  r["medium"] = conv.medium_summary;
  r["seeds"] = conv.seeds;
  r["mean_l2"] = conv.mean_l2;
  r["spread_l2"] = conv.spread_l2;
  r["mean_gap"] = conv.mean_gap;
  json entries = json::array();
  for (const auto& e : conv.entries) {
    json je;
    je["eps"] = e.eps;
    je["seed"] = e.seed;
    je["l2_error"] = e.l2_error;
    je["energy_J"] = e.energy_J_eps;
    je["energy_gap"] = e.energy_gap;
    je["holes"] = e.hole_count;
    if (!e.error.empty()) je["error"] = e.error;
    entries.push_back(std::move(je));
  }
  r["entries"] = std::move(entries);
  rep.results = std::move(r);
}

} // namespace

json Report::payload() const {
  json j;
  j["subcommand"] = subcommand;
  j["config"] = config_echo;
  j["version"] = version;
  j["results"] = results;
  j["warnings"] = warnings;
  return j;
}

json Report::full() const {
  json j = payload();
  j["timings"] = timings;
  return j;
}

Report dispatch(const std::string& subcommand, const RunConfig& cfg) {
  Report rep;
  rep.subcommand = subcommand;
  rep.config_echo = config_to_json(cfg);
  rep.version = version_stamp();
  const auto t0 = std::chrono::steady_clock::now();

  if (subcommand == "capacity") run_capacity(cfg, rep);
  else if (subcommand == "ell") run_ell(cfg, rep);
  else if (subcommand == "alpha0") run_alpha0(cfg, rep);
  else if (subcommand == "corrector") run_corrector(cfg, rep);
  else if (subcommand == "solve-eps") run_solve_eps(cfg, rep);
  else if (subcommand == "solve-aux") run_solve_aux(cfg, rep);
  else if (subcommand == "solve-hom") run_solve_hom(cfg, rep);
  else if (subcommand == "converge") run_converge(cfg, rep);
  else throw ConfigError("unknown subcommand: " + subcommand);

  const auto t1 = std::chrono::steady_clock::now();
  rep.timings["seconds"] = std::chrono::duration<double>(t1 - t0).count();
  return rep;
}

void emit_plot_data(const Report& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  auto open_csv = [&](const std::string& name, const std::string& header) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw std::runtime_error("emit_plot_data: cannot open " + name);
    out << header << '\n';
    return out;
  };
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };

  if (rep.subcommand == "ell") {
    auto out = open_csv("ell.csv", "alpha,t,sample,ratio");
    const double alpha = rep.results.at("alpha").get<double>();
    const auto& sizes = rep.results.at("window_sizes");
    const auto& ratios = rep.results.at("ratios");
    for (std::size_t ti = 0; ti < ratios.size(); ++ti)
      for (std::size_t s = 0; s < ratios[ti].size(); ++s)
        out << num(alpha) << ',' << sizes[ti].get<int>() << ',' << s << ','
            << num(ratios[ti][s].get<double>()) << '\n';
  } else if (rep.subcommand == "alpha0") {
    auto out = open_csv("alpha0_trace.csv", "alpha,ell_hat,ci,verdict,retried");
    for (const auto& t : rep.results.at("trace"))
      out << num(t.at("alpha").get<double>()) << ',' << num(t.at("ell_hat").get<double>()) << ','
          << num(t.at("ci").get<double>()) << ',' << t.at("verdict").get<int>() << ','
          << (t.at("retried").get<bool>() ? 1 : 0) << '\n';
  } else if (rep.subcommand == "corrector") {
    auto out = open_csv("corrector.csv", "eps,l2,h1_semi");
    for (const auto& e : rep.results.at("per_eps"))
      out << num(e.at("eps").get<double>()) << ',' << num(e.at("l2").get<double>()) << ','
          << num(e.at("h1_semi").get<double>()) << '\n';
  } else if (rep.subcommand == "converge") {
    auto out = open_csv("converge.csv", "eps,seed,l2_error,energy_gap");
    for (const auto& e : rep.results.at("entries")) {
      if (e.contains("error")) continue;
      out << num(e.at("eps").get<double>()) << ',' << e.at("seed").get<std::uint64_t>() << ','
          << num(e.at("l2_error").get<double>()) << ',' << num(e.at("energy_gap").get<double>())
          << '\n';
    }
  } else if (rep.subcommand == "capacity" && rep.results.contains("farfield")) {
    auto out = open_csv("farfield.csv", "rho,deviation");
    const auto& ff = rep.results.at("farfield");
    for (std::size_t i = 0; i < ff.at("rho").size(); ++i)
      out << num(ff.at("rho")[i].get<double>()) << ',' << num(ff.at("deviation")[i].get<double>())
          << '\n';
  }
}

void write_outputs(const Report& rep, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(fs::path(cfg.out_dir) / "report.json");
    if (!out) throw std::runtime_error("write_outputs: cannot open report.json");
    out << rep.full().dump(2) << '\n';
  }
  emit_plot_data(rep, cfg.out_dir);
  for (const auto& [name, field] : rep.field_dumps)
    dump_field(field, (fs::path(cfg.out_dir) / name).string());
}

} // namespace perfhom
