#include "saadp/model.hpp"

#include <algorithm>

namespace saadp {

StateGrid build_grid(double lo, double hi, int n_nodes) {
  if (!(lo < hi)) throw ConfigError("build_grid: lo must be < hi");
  if (n_nodes < 2) throw ConfigError("build_grid: need at least 2 nodes");
  return StateGrid{lo, hi, n_nodes};
}

void GridValueFunction::validate() const {
  if (grid.n_nodes < 2) throw ModelError("value function: node count < 2");
  if (values.size() != static_cast<std::size_t>(grid.n_nodes))
    throw ModelError("value function: node/value length mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw ModelError("value function: non-finite value");
}

double grid_eval(const GridValueFunction& vf, double x) {
  if (!std::isfinite(x)) throw std::domain_error("grid_eval: non-finite state");
  return grid_interp(vf.grid, vf.values, x);
}

double policy_eval(const GridPolicy& p, double x) {
  if (!std::isfinite(x)) throw std::domain_error("policy_eval: non-finite state");
  return grid_interp(p.grid, p.controls, x);
}

UniformComponent UniformComponent::make(double a, double b) {
  if (!(a < b)) throw ModelError("uniform component: need a < b");
  UniformComponent c;
  c.a = a;
  c.b = b;
  const double w = b - a;
  c.mu2 = w * w / 12.0;
  c.mu3 = 0.0;  // uniform is symmetric about its mean
  c.mu4 = w * w * w * w / 80.0;
  return c;
}

const UniformComponent& NoiseSpec::scalar(int t) const {
  const auto& comps = stages.at(static_cast<std::size_t>(t - 1));
  if (comps.size() != 1) throw ModelError("noise: scalar engine needs exactly one component per stage");
  return comps[0];
}

NoiseSpec NoiseSpec::iid_scalar(int horizon, double a, double b) {
  NoiseSpec spec;
  spec.stages.assign(static_cast<std::size_t>(horizon), {UniformComponent::make(a, b)});
  return spec;
}

double StageModel::cost(double x, double u, double xi) const {
  return std::visit([&](const auto& k) { return k.cost(x, u, xi); }, kernel);
}

double StageModel::dynamics(double x, double u, double xi) const {
  return std::visit([&](const auto& k) { return k.dynamics(x, u, xi); }, kernel);
}

void ProblemInstance::validate() const {
  if (horizon < 1) throw ModelError("problem: horizon must be >= 1");
  if (stages.size() != static_cast<std::size_t>(horizon)) throw ModelError("problem: stage count != horizon");
  if (grids.size() != static_cast<std::size_t>(horizon) + 1) throw ModelError("problem: need T+1 grids");
  if (noise.horizon() != horizon) throw ModelError("problem: noise horizon mismatch");
  if (!terminal_cost) throw ModelError("problem: missing terminal cost");
  for (const auto& g : grids)
    if (!(g.lo < g.hi) || g.n_nodes < 2) throw ModelError("problem: invalid grid");
  for (const auto& s : stages)
    if (!(s.u_lo <= s.u_hi)) throw ModelError("problem: invalid control interval");
  // Spot-check finiteness and next-grid coverage on corners of each
  // stage's (grid x control x support) box.
  for (int t = 1; t <= horizon; ++t) {
    const auto& st = stage(t);
    const auto& comp = noise.scalar(t);
    const auto& g = grid(t);
    const double margin = grid(t + 1).hi - grid(t + 1).lo;  // declared clamping margin
    for (double x : {g.lo, g.hi})
      for (double u : {st.u_lo, st.u_hi})
        for (double xi : {comp.a, comp.b}) {
          const double c = st.cost(x, u, xi);
          const double y = st.dynamics(x, u, xi);
          if (!std::isfinite(c) || !std::isfinite(y)) throw ModelError("problem: non-finite stage evaluation");
          if (y < grid(t + 1).lo - margin || y > grid(t + 1).hi + margin)
            throw ModelError("problem: dynamics leave the next grid beyond the clamping margin");
        }
  }
}

GridValueFunction terminal_value(const ProblemInstance& problem) {
  const StateGrid& g = problem.grid(problem.horizon + 1);
  GridValueFunction vf;
  vf.stage = problem.horizon + 1;
  vf.grid = g;
  vf.values.resize(static_cast<std::size_t>(g.n_nodes));
  for (int i = 0; i < g.n_nodes; ++i) {
    const double v = problem.terminal_cost(g.node(i));
    if (!std::isfinite(v)) throw ModelError("terminal_value: non-finite terminal cost");
    vf.values[static_cast<std::size_t>(i)] = v;
  }
  return vf;
}

}  // namespace saadp
