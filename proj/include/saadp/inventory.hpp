#pragma once

#include <span>
#include <vector>

#include "saadp/dp.hpp"
#include "saadp/model.hpp"

namespace saadp::inventory {

// Piecewise-linear inventory control: order u at cost c_t per unit, pay
// b_t per backordered and h_t per held unit against demand xi.
struct InventoryParams {
  std::vector<double> order_cost;      // c_t
  std::vector<double> backorder_cost;  // b_t
  std::vector<double> holding_cost;    // h_t
  std::vector<double> demand_max;      // xi-bar_t, demand ~ Uniform(0, xi-bar_t)
  double initial_stock = 1.0;
  int horizon = 5;

  void validate() const;
  double total_max_demand() const;
  static InventoryParams defaults(int horizon = 5);
};

StageModel inventory_stage_model(const InventoryParams& params, int t);

// Full grid problem: state grids cover all reachable states under the
// u <= total-max-demand cap; terminal cost is zero.
ProblemInstance build_problem(const InventoryParams& params, int nodes_per_grid);

struct BasestockFit {
  double level = 0.0;  // s_t
  bool conforms = false;
};

// Checks that the tabulated policy is order-up-to: x + u(x) constant on
// the ordering region and u ~ 0 above it.
BasestockFit basestock_extract(const GridPolicy& policy, double tolerance);

struct BruteForceResult {
  double value = 0.0;
  double minimizer = 0.0;
};

// Exhaustive SAA inner minimization on a uniform control grid enriched
// with every sample kink {xi_i - x} and every value-function kink
// preimage; oracle for bellman_saa.
BruteForceResult brute_force_inner(const StageModel& stage, const GridValueFunction& v_next,
                                   std::span<const double> samples, double x, double control_grid_step);

}  // namespace saadp::inventory
