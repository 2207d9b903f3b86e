#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "perfhom/config.hpp"
#include "perfhom/grid.hpp"

namespace perfhom {

// Machine-readable run record. Timings live in their own object so that
// determinism checks can compare payload() byte-for-byte.
struct Report {
  std::string subcommand;
  nlohmann::json config_echo;
  nlohmann::json version;
  nlohmann::json results;
  std::vector<std::string> warnings;
  nlohmann::json timings;
  std::vector<std::pair<std::string, ScalarField>> field_dumps;

  nlohmann::json payload() const; // deterministic given config + seed
  nlohmann::json full() const;    // payload + timings
};

// Runs one subcommand pipeline: capacity, ell, alpha0, corrector, solve-eps,
// solve-aux, solve-hom, converge. Throws ConfigError for usage-level
// problems; solver errors propagate as exceptions.
Report dispatch(const std::string& subcommand, const RunConfig& cfg);

// Tidy CSVs (one row per observation) next to report.json.
void emit_plot_data(const Report& rep, const std::string& out_dir);

// report.json + CSVs + optional field dumps under cfg.out_dir.
void write_outputs(const Report& rep, const RunConfig& cfg);

} // namespace perfhom
