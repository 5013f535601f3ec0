#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saadp/inventory.hpp"
#include "saadp/lqr.hpp"
#include "saadp/mc.hpp"

namespace saadp::cli {

enum class ProblemKind { Lqr, Inventory };

// Validated run configuration; mirrors the JSON schema section by
// section. Unknown keys in the document are rejected.
struct RunConfig {
  ProblemKind kind = ProblemKind::Lqr;

  // problem
  int horizon = 20;
  double initial_state = 1.0;
  double noise_half_width = 1.7320508075688772;  // lqr: Uniform(-w, w)
  inventory::InventoryParams inventory_params;   // inventory kind only

  // grids
  double grid_lo = -8.0;
  double grid_hi = 8.0;
  int grid_nodes = 1601;
  int cov_nodes = 401;
  double control_lo = -8.0;
  double control_hi = 8.0;

  // quadrature
  int quad_nodes = 64;

  // mc
  int sample_size = 1000;
  int replications = 10000;
  std::uint64_t seed = 20250826;
  std::vector<double> eval_states{1.0};
  std::vector<int> eval_stages{1, 10, 20};
  int workers = 1;
  std::uint64_t paths = 1000000;
  mc::Engine engine = mc::Engine::LqrClosedForm;

  // output
  std::string output_dir = "out";
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& file);
RunConfig preset(const std::string& name);  // lqr-benchmark, lqr-heavy-control, inventory-default

// Grid-engine problem corresponding to the config.
ProblemInstance build_problem(const RunConfig& config);

// Subcommand bodies; each writes its CSV outputs under config.output_dir.
void cmd_lqr_analytic(const RunConfig& config);
void cmd_simulate(const RunConfig& config);
void cmd_covariance(const RunConfig& config);
void cmd_optimal_value(const RunConfig& config);

}  // namespace saadp::cli
