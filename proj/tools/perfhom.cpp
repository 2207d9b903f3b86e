// Command-line driver: seeded, reproducible experiment runs writing
// report.json + CSV sweeps under --out.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "perfhom/harness.hpp"

using nlohmann::json;

namespace {

json parse_shape_flag(const std::string& s) {
  json j;
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  j["kind"] = kind;
  if (kind == "ball") {
    if (colon == std::string::npos) throw perfhom::ConfigError("--shape ball needs ball:<r>");
    j["r"] = std::stod(s.substr(colon + 1));
  } else if (kind == "box") {
    if (colon == std::string::npos)
      throw perfhom::ConfigError("--shape box needs box:<hw,hw[,hw]>");
    std::vector<double> hw;
    std::stringstream ss(s.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) hw.push_back(std::stod(tok));
    j["half_widths"] = hw;
  } else if (kind != "empty") {
    throw perfhom::ConfigError("--shape: unknown kind '" + kind + "'");
  }
  return j;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if constexpr (std::is_same_v<T, int>) out.push_back(std::stoi(tok));
    else out.push_back(std::stod(tok));
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfhom: obstacle-problem homogenization in randomly perforated domains"};
  app.require_subcommand(1);

  std::string config_path, out_dir, shape_flag, eps_flag, t_flag, mode_flag, law_flag;
  std::uint64_t seed = 0;
  bool seed_set = false, dump_fields = false;
  int dim = 0, workers = 0, samples = 0, m = 0, grid_nodes = 0, nseeds = 0;
  double alpha = std::nan(""), alpha0 = std::nan(""), h = std::nan(""), box = std::nan("");
  double f_const = std::nan(""), p = std::nan(""), gamma = std::nan("");

  const std::vector<std::string> subcommands = {"capacity", "ell",       "alpha0",    "corrector",
                                                "solve-eps", "solve-aux", "solve-hom", "converge"};
  for (const auto& name : subcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--dim,--n", dim, "dimension (2 or 3)");
    sub->add_option("--workers", workers, "worker threads for independent jobs");
    sub->add_option("--alpha", alpha, "alpha for ell / solve-aux");
    sub->add_option("--alpha0", alpha0, "pinned alpha0 (skip estimation)");
    sub->add_option("--eps,--eps-list", eps_flag, "comma list of eps values");
    sub->add_option("--t,--t-list", t_flag, "comma list of window sizes");
    sub->add_option("--samples", samples, "Monte Carlo samples per window");
    sub->add_option("--m,--cells-per-unit", m, "grid cells per lattice unit");
    sub->add_option("--shape", shape_flag, "capacity shape, e.g. ball:0.25 or box:0.5,0.5,0.5");
    sub->add_option("--h", h, "grid spacing for capacity solves");
    sub->add_option("--box,--box-radius", box, "capacity box half-width (n=3)");
    sub->add_option("--f", f_const, "constant source term");
    sub->add_option("--grid-nodes", grid_nodes, "nodes per side of the domain grid");
    sub->add_option("--mode", mode_flag, "hole mode: automatic|resolved|point");
    sub->add_option("--p", p, "Lp exponent for corrector norms");
    sub->add_option("--seeds", nseeds, "number of seeds for converge");
    sub->add_option("--gamma", gamma, "constant-law gamma override");
    sub->add_option("--law", law_flag, "medium law name");
    sub->add_flag("--dump-fields", dump_fields, "write field dumps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json j;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw perfhom::ConfigError("config file not found: " + config_path);
      in >> j;
    }
    auto experiment = [&]() -> json& { return j["experiment"]; };
    auto medium = [&]() -> json& { return j["medium"]; };
    if (dim > 0) j["dim"] = dim;
    if (seed_set) j["seed"] = seed;
    if (workers > 0) j["workers"] = workers;
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    if (const char* env_out = std::getenv("PERFHOM_OUT"); env_out && out_dir.empty())
      j["out_dir"] = std::string(env_out);
    if (!std::isnan(alpha)) experiment()["alpha"] = alpha;
    if (!std::isnan(alpha0)) experiment()["alpha0"] = alpha0;
    if (!eps_flag.empty()) experiment()["eps_list"] = parse_list<double>(eps_flag);
    if (!t_flag.empty()) experiment()["t_list"] = parse_list<int>(t_flag);
    if (samples > 0) experiment()["samples"] = samples;
    if (m > 0) experiment()["cells_per_unit"] = m;
    if (!shape_flag.empty()) experiment()["shape"] = parse_shape_flag(shape_flag);
    if (!std::isnan(h)) experiment()["h"] = h;
    if (!std::isnan(box)) experiment()["box_radius"] = box;
    if (!std::isnan(f_const)) experiment()["f_const"] = f_const;
    if (grid_nodes > 0) experiment()["grid_nodes"] = grid_nodes;
    if (!mode_flag.empty()) experiment()["hole_mode"] = mode_flag;
    if (!std::isnan(p)) experiment()["p"] = p;
    if (nseeds > 0) experiment()["seeds"] = nseeds;
    if (dump_fields) experiment()["dump_fields"] = true;
    if (!std::isnan(gamma)) {
      medium()["gamma"] = gamma;
      if (!medium().contains("gamma_bar")) medium()["gamma_bar"] = gamma;
    }
    if (!law_flag.empty()) medium()["law"] = law_flag;

    const perfhom::RunConfig cfg = perfhom::parse_config(j);
    const std::string sub = app.get_subcommands().front()->get_name();
    const perfhom::Report rep = perfhom::dispatch(sub, cfg);
    perfhom::write_outputs(rep, cfg);
    std::cout << rep.full().dump(2) << std::endl;
    return 0;
  } catch (const perfhom::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
