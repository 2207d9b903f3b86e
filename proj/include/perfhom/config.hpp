#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "perfhom/random_media.hpp"
#include "perfhom/shape.hpp"

namespace perfhom {

// Subcommand-specific knobs; every field has a dim-aware default and appears
// in the effective-config echo (no silent defaults).
struct ExperimentConfig {
  std::vector<int> t_list;
  int cells_per_unit = 8;
  int samples = 16;
  int margin = 1;
  double alpha = 4.0;
  double theta = 0.005;
  double rtol = 0.1;
  int max_evals = 20;
  std::vector<double> eps_list;
  std::optional<double> alpha0; // pinned coefficient; estimated when absent
  double f_const = -1.0;
  int grid_nodes = 257;
  HoleMode hole_mode = HoleMode::automatic;
  double p = 2.0;
  ShapeSpec shape = ShapeSpec::ball(0.25);
  double box_radius = 1.0;
  double h = 1.0 / 128;
  int seeds = 3;
  bool dump_fields = false;
};

struct RunConfig {
  int dim = 2;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
  MediumConfig medium;
  ExperimentConfig experiment;
};

// Schema-validated parse with defaults filled; unknown keys are rejected
// with a field-level message (ConfigError).
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

// Effective config, round-trips through parse_config to the same RunConfig.
nlohmann::json config_to_json(const RunConfig& cfg);

} // namespace perfhom
