#include "saadp/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace saadp::inventory {

void InventoryParams::validate() const {
  const auto T = static_cast<std::size_t>(horizon);
  if (horizon < 1) throw ModelError("inventory: horizon must be >= 1");
  if (order_cost.size() != T || backorder_cost.size() != T || holding_cost.size() != T || demand_max.size() != T)
    throw ModelError("inventory: per-stage parameter count != horizon");
  for (std::size_t t = 0; t < T; ++t) {
    if (!(backorder_cost[t] > order_cost[t] && order_cost[t] > 0.0))
      throw ModelError("inventory: need b_t > c_t > 0");
    if (holding_cost[t] < 0.0) throw ModelError("inventory: need h_t >= 0");
    if (!(demand_max[t] > 0.0)) throw ModelError("inventory: need positive demand bound");
  }
}

double InventoryParams::total_max_demand() const {
  return std::accumulate(demand_max.begin(), demand_max.end(), 0.0);
}

InventoryParams InventoryParams::defaults(int horizon) {
  InventoryParams p;
  p.horizon = horizon;
  p.order_cost.assign(static_cast<std::size_t>(horizon), 1.0);
  p.backorder_cost.assign(static_cast<std::size_t>(horizon), 3.0);
  p.holding_cost.assign(static_cast<std::size_t>(horizon), 1.0);
  p.demand_max.assign(static_cast<std::size_t>(horizon), 2.0);
  p.initial_stock = 1.0;
  return p;
}

StageModel inventory_stage_model(const InventoryParams& params, int t) {
  params.validate();
  const std::size_t ti = static_cast<std::size_t>(t - 1);
  StageModel st;
  st.kernel = InventoryStage{params.order_cost[ti], params.backorder_cost[ti], params.holding_cost[ti]};
  st.u_lo = 0.0;
  // Ordering more than total remaining maximal demand is never optimal
  // under b > c; a minimizer at this cap signals a config problem.
  st.u_hi = params.total_max_demand();
  st.convex = true;
  return st;
}

ProblemInstance build_problem(const InventoryParams& params, int nodes_per_grid) {
  params.validate();
  const int T = params.horizon;
  ProblemInstance p;
  p.horizon = T;
  p.initial_state = params.initial_stock;
  for (int t = 1; t <= T; ++t) p.stages.push_back(inventory_stage_model(params, t));
  p.terminal_cost = [](double) { return 0.0; };
  // Stage-t states reach down to x_1 minus the demand already seen; keeping
  // the lower bound tight per stage keeps the order cap slack at the optimum
  // (ordering up to any sensible level never needs more than total demand).
  const double hi = params.initial_stock + params.total_max_demand();
  double seen_demand = 0.0;
  for (int t = 1; t <= T + 1; ++t) {
    p.grids.push_back(build_grid(params.initial_stock - seen_demand, hi, nodes_per_grid));
    if (t <= T) seen_demand += params.demand_max[static_cast<std::size_t>(t - 1)];
  }
  NoiseSpec noise;
  for (int t = 1; t <= T; ++t)
    noise.stages.push_back({UniformComponent::make(0.0, params.demand_max[static_cast<std::size_t>(t - 1)])});
  p.noise = noise;
  return p;
}

BasestockFit basestock_extract(const GridPolicy& policy, double tolerance) {
  BasestockFit fit;
  const int n = policy.grid.n_nodes;
  double up_to_min = 0.0, up_to_max = 0.0;
  bool any_order = false;
  int last_order_node = -1;
  for (int i = 0; i < n; ++i) {
    const double x = policy.grid.node(i);
    const double u = policy.controls[static_cast<std::size_t>(i)];
    if (u > tolerance) {
      const double up_to = x + u;
      if (!any_order) {
        up_to_min = up_to_max = up_to;
      } else {
        up_to_min = std::min(up_to_min, up_to);
        up_to_max = std::max(up_to_max, up_to);
      }
      any_order = true;
      last_order_node = i;
    }
  }
  if (!any_order) {
    // Never ordering is vacuously basestock at the grid lower bound.
    fit.level = policy.grid.lo;
    fit.conforms = true;
    return fit;
  }
  fit.level = policy.grid.node(last_order_node) +
              policy.controls[static_cast<std::size_t>(last_order_node)];
  bool conforms = (up_to_max - up_to_min) <= tolerance;
  // Above the ordering region the policy must stay (numerically) at zero.
  for (int i = last_order_node + 1; i < n; ++i)
    if (policy.controls[static_cast<std::size_t>(i)] > tolerance) conforms = false;
  fit.conforms = conforms;
  return fit;
}

BruteForceResult brute_force_inner(const StageModel& stage, const GridValueFunction& v_next,
                                   std::span<const double> samples, double x, double control_grid_step) {
  if (!(control_grid_step > 0.0)) throw ConfigError("brute_force_inner: step must be positive");
  const double u_lo = stage.u_lo, u_hi = stage.u_hi;
  std::vector<double> candidates;
  const int steps = static_cast<int>(std::ceil((u_hi - u_lo) / control_grid_step));
  candidates.reserve(static_cast<std::size_t>(steps) + samples.size() * static_cast<std::size_t>(v_next.grid.n_nodes) + 2);
  for (int i = 0; i <= steps; ++i) candidates.push_back(std::min(u_lo + i * control_grid_step, u_hi));
  // Cost kinks: x + u - xi_i = 0; value-function kinks: dynamics hit a node.
  for (double xi : samples) {
    const double kink = xi - x;
    if (kink >= u_lo && kink <= u_hi) candidates.push_back(kink);
    for (int jn = 0; jn < v_next.grid.n_nodes; ++jn) {
      const double u = v_next.grid.node(jn) - x + xi;
      if (u >= u_lo && u <= u_hi) candidates.push_back(u);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  BruteForceResult best{std::numeric_limits<double>::infinity(), u_lo};
  for (double u : candidates) {
    double acc = 0.0;
    for (double xi : samples) acc += stage.cost(x, u, xi) + grid_eval(v_next, stage.dynamics(x, u, xi));
    acc *= inv_n;
    if (acc < best.value || (acc == best.value && u < best.minimizer)) best = {acc, u};
  }
  return best;
}

}  // namespace saadp::inventory
