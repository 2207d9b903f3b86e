#include "perfhom/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace perfhom {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError(where + "." + item.key() + ": unknown key");
}

MediumLaw law_from_string(const std::string& s) {
  if (s == "constant") return MediumLaw::constant;
  if (s == "iid_uniform") return MediumLaw::iid_uniform;
  if (s == "bernoulli_dilution") return MediumLaw::bernoulli_dilution;
  if (s == "moving_average") return MediumLaw::moving_average;
  if (s == "shifted_periodic") return MediumLaw::shifted_periodic;
  throw ConfigError("medium.law: unknown law '" + s + "'");
}

std::string law_to_string(MediumLaw law) {
  switch (law) {
    case MediumLaw::constant: return "constant";
    case MediumLaw::iid_uniform: return "iid_uniform";
    case MediumLaw::bernoulli_dilution: return "bernoulli_dilution";
    case MediumLaw::moving_average: return "moving_average";
    case MediumLaw::shifted_periodic: return "shifted_periodic";
  }
  return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "ball") return ShapeKind::ball;
  if (s == "box") return ShapeKind::box;
  if (s == "point") return ShapeKind::point;
  throw ConfigError("medium.shape_kind: unknown kind '" + s + "'");
}

std::string shape_kind_to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::ball: return "ball";
    case ShapeKind::box: return "box";
    case ShapeKind::point: return "point";
  }
  return "?";
}

HoleMode hole_mode_from_string(const std::string& s) {
  if (s == "automatic") return HoleMode::automatic;
  if (s == "resolved") return HoleMode::resolved;
  if (s == "point") return HoleMode::point;
  throw ConfigError("experiment.hole_mode: unknown mode '" + s + "'");
}

std::string hole_mode_to_string(HoleMode m) {
  switch (m) {
    case HoleMode::automatic: return "automatic";
    case HoleMode::resolved: return "resolved";
    case HoleMode::point: return "point";
  }
  return "?";
}

ShapeSpec shape_from_json(const json& j) {
  check_keys(j, {"kind", "r", "half_widths"}, "experiment.shape");
  const std::string kind = j.value("kind", "ball");
  if (kind == "ball") return ShapeSpec::ball(j.value("r", 0.25));
  if (kind == "empty") return ShapeSpec::empty();
  if (kind == "box") {
    if (!j.contains("half_widths")) throw ConfigError("experiment.shape.half_widths: required");
    const auto hw = j.at("half_widths").get<std::vector<double>>();
    if (hw.size() < 2 || hw.size() > 3)
      throw ConfigError("experiment.shape.half_widths: need 2 or 3 entries");
    return ShapeSpec::box({hw[0], hw[1], hw.size() == 3 ? hw[2] : 0.0});
  }
  throw ConfigError("experiment.shape.kind: unknown kind '" + kind + "'");
}

json shape_to_json(const ShapeSpec& s) {
  json j;
  switch (s.kind) {
    case ShapeSpec::Kind::ball:
      j["kind"] = "ball";
      j["r"] = s.radius;
      break;
    case ShapeSpec::Kind::box:
      j["kind"] = "box";
      j["half_widths"] = {s.half_widths[0], s.half_widths[1], s.half_widths[2]};
      break;
    case ShapeSpec::Kind::empty:
      j["kind"] = "empty";
      break;
  }
  return j;
}

} // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, {"dim", "seed", "out_dir", "workers", "medium", "experiment"}, "config");
  RunConfig cfg;
  cfg.dim = j.value("dim", 2);
  if (cfg.dim != 2 && cfg.dim != 3) throw ConfigError("dim: must be 2 or 3");
  cfg.seed = j.value("seed", std::uint64_t(1));
  cfg.out_dir = j.value("out_dir", std::string("out"));
  cfg.workers = j.value("workers", 1);
  if (cfg.workers < 1) throw ConfigError("workers: must be >= 1");

  // Medium defaults: the constant critical-ball medium of the paper's
  // running example (r = 1 in lattice units).
  MediumConfig& m = cfg.medium;
  m.dim = cfg.dim;
  const double gamma_default = cfg.dim == 2 ? 2 * M_PI : 4 * M_PI;
  m.law = MediumLaw::constant;
  m.gamma = gamma_default;
  m.gamma_bar = gamma_default;
  if (j.contains("medium")) {
    const json& jm = j.at("medium");
    check_keys(jm,
               {"law", "gamma", "gamma_lo", "gamma_hi", "p_empty", "ma_range", "ma_weights",
                "period", "pattern", "gamma_bar", "gamma_lower", "envelope_M", "shape_kind"},
               "medium");
    if (jm.contains("law")) m.law = law_from_string(jm.at("law").get<std::string>());
    m.gamma = jm.value("gamma", m.gamma);
    m.gamma_lo = jm.value("gamma_lo", 0.0);
    m.gamma_hi = jm.value("gamma_hi", 0.0);
    m.p_empty = jm.value("p_empty", 0.0);
    m.ma_range = jm.value("ma_range", 1);
    if (jm.contains("ma_weights")) m.ma_weights = jm.at("ma_weights").get<std::vector<double>>();
    m.period = jm.value("period", 2);
    if (jm.contains("pattern")) m.pattern = jm.at("pattern").get<std::vector<double>>();
    m.gamma_bar = jm.value("gamma_bar", std::max({m.gamma, m.gamma_hi, gamma_default}));
    if (jm.contains("gamma_lower")) m.gamma_lower = jm.at("gamma_lower").get<double>();
    m.envelope_M = jm.value("envelope_M", 0.0);
    if (jm.contains("shape_kind"))
      m.shape_kind = shape_kind_from_string(jm.at("shape_kind").get<std::string>());
  }
  m.validate();

  ExperimentConfig& e = cfg.experiment;
  e.t_list = cfg.dim == 2 ? std::vector<int>{8, 16, 32, 64} : std::vector<int>{4, 8, 16};
  e.cells_per_unit = cfg.dim == 2 ? 8 : 6;
  e.samples = cfg.dim == 2 ? 16 : 8;
  e.eps_list = {0.5, 1.0 / 3, 0.25};
  e.grid_nodes = cfg.dim == 2 ? 257 : 65;
  e.box_radius = cfg.dim == 2 ? 1.0 : 3.0;
  e.h = cfg.dim == 2 ? 1.0 / 128 : 1.0 / 32;
  if (j.contains("experiment")) {
    const json& je = j.at("experiment");
    check_keys(je,
               {"t_list", "cells_per_unit", "samples", "margin", "alpha", "theta", "rtol",
                "max_evals", "eps_list", "alpha0", "f_const", "grid_nodes", "hole_mode", "p",
                "shape", "box_radius", "h", "seeds", "dump_fields"},
               "experiment");
    if (je.contains("t_list")) e.t_list = je.at("t_list").get<std::vector<int>>();
    e.cells_per_unit = je.value("cells_per_unit", e.cells_per_unit);
    e.samples = je.value("samples", e.samples);
    e.margin = je.value("margin", e.margin);
    e.alpha = je.value("alpha", e.alpha);
    e.theta = je.value("theta", e.theta);
    e.rtol = je.value("rtol", e.rtol);
    e.max_evals = je.value("max_evals", e.max_evals);
    if (je.contains("eps_list")) e.eps_list = je.at("eps_list").get<std::vector<double>>();
    if (je.contains("alpha0") && !je.at("alpha0").is_null())
      e.alpha0 = je.at("alpha0").get<double>();
    e.f_const = je.value("f_const", e.f_const);
    e.grid_nodes = je.value("grid_nodes", e.grid_nodes);
    if (je.contains("hole_mode"))
      e.hole_mode = hole_mode_from_string(je.at("hole_mode").get<std::string>());
    e.p = je.value("p", e.p);
    if (je.contains("shape")) e.shape = shape_from_json(je.at("shape"));
    e.box_radius = je.value("box_radius", e.box_radius);
    e.h = je.value("h", e.h);
    e.seeds = je.value("seeds", e.seeds);
    e.dump_fields = je.value("dump_fields", false);
  }
  if (e.t_list.empty()) throw ConfigError("experiment.t_list: must be nonempty");
  for (std::size_t i = 1; i < e.t_list.size(); ++i)
    if (e.t_list[i] <= e.t_list[i - 1])
      throw ConfigError("experiment.t_list: must be increasing");
  if (e.cells_per_unit < 4) throw ConfigError("experiment.cells_per_unit: must be >= 4");
  if (e.samples < 1) throw ConfigError("experiment.samples: must be >= 1");
  if (e.margin < 0) throw ConfigError("experiment.margin: must be >= 0");
  if (!(e.theta > 0)) throw ConfigError("experiment.theta: must be positive");
  if (!(e.rtol > 0)) throw ConfigError("experiment.rtol: must be positive");
  if (!(e.p >= 1)) throw ConfigError("experiment.p: must be >= 1");
  if (e.grid_nodes < 8) throw ConfigError("experiment.grid_nodes: must be >= 8");
  if (e.seeds < 1) throw ConfigError("experiment.seeds: must be >= 1");
  for (double eps : e.eps_list)
    if (!(eps > 0) || eps >= 1) throw ConfigError("experiment.eps_list: eps must lie in (0,1)");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["dim"] = cfg.dim;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["workers"] = cfg.workers;

  json jm;
  jm["law"] = law_to_string(cfg.medium.law);
  jm["gamma"] = cfg.medium.gamma;
  jm["gamma_lo"] = cfg.medium.gamma_lo;
  jm["gamma_hi"] = cfg.medium.gamma_hi;
  jm["p_empty"] = cfg.medium.p_empty;
  jm["ma_range"] = cfg.medium.ma_range;
  if (!cfg.medium.ma_weights.empty()) jm["ma_weights"] = cfg.medium.ma_weights;
  jm["period"] = cfg.medium.period;
  if (!cfg.medium.pattern.empty()) jm["pattern"] = cfg.medium.pattern;
  jm["gamma_bar"] = cfg.medium.gamma_bar;
  if (cfg.medium.gamma_lower) jm["gamma_lower"] = *cfg.medium.gamma_lower;
  jm["envelope_M"] = cfg.medium.envelope_M;
  jm["shape_kind"] = shape_kind_to_string(cfg.medium.shape_kind);
  j["medium"] = jm;

  json je;
  je["t_list"] = cfg.experiment.t_list;
  je["cells_per_unit"] = cfg.experiment.cells_per_unit;
  je["samples"] = cfg.experiment.samples;
  je["margin"] = cfg.experiment.margin;
  je["alpha"] = cfg.experiment.alpha;
  je["theta"] = cfg.experiment.theta;
  je["rtol"] = cfg.experiment.rtol;
  je["max_evals"] = cfg.experiment.max_evals;
  je["eps_list"] = cfg.experiment.eps_list;
  if (cfg.experiment.alpha0) je["alpha0"] = *cfg.experiment.alpha0;
  je["f_const"] = cfg.experiment.f_const;
  je["grid_nodes"] = cfg.experiment.grid_nodes;
  je["hole_mode"] = hole_mode_to_string(cfg.experiment.hole_mode);
  je["p"] = cfg.experiment.p;
  je["shape"] = shape_to_json(cfg.experiment.shape);
  je["box_radius"] = cfg.experiment.box_radius;
  je["h"] = cfg.experiment.h;
  je["seeds"] = cfg.experiment.seeds;
  je["dump_fields"] = cfg.experiment.dump_fields;
  j["experiment"] = je;
  return j;
}

} // namespace perfhom
