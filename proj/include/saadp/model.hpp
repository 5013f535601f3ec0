#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace saadp {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform 1-D state grid. Nodes are lo, lo+h, ..., hi inclusive.
struct StateGrid {
  double lo = 0.0;
  double hi = 1.0;
  int n_nodes = 2;

  double spacing() const { return (hi - lo) / (n_nodes - 1); }
  double node(int i) const { return lo + spacing() * i; }
  std::vector<double> nodes() const {
    std::vector<double> out(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) out[static_cast<std::size_t>(i)] = node(i);
    return out;
  }
};

StateGrid build_grid(double lo, double hi, int n_nodes);

// Tabulated value function: piecewise linear between nodes, extrapolated
// with the nearest end segment's slope outside [lo, hi].
struct GridValueFunction {
  int stage = 0;
  StateGrid grid;
  std::vector<double> values;

  void validate() const;
};

struct GridPolicy {
  int stage = 0;
  StateGrid grid;
  std::vector<double> controls;
};

// Core interpolation kernel, shared by value functions, policies and
// covariance grids. Clamping the segment index yields one-sided-slope
// linear extrapolation for free.
inline double grid_interp(const StateGrid& g, const std::vector<double>& v, double x) {
  double p = (x - g.lo) / g.spacing();
  int k = static_cast<int>(std::floor(p));
  if (k < 0) k = 0;
  if (k > g.n_nodes - 2) k = g.n_nodes - 2;
  const std::size_t ku = static_cast<std::size_t>(k);
  return v[ku] + (p - k) * (v[ku + 1] - v[ku]);
}

double grid_eval(const GridValueFunction& vf, double x);
double policy_eval(const GridPolicy& p, double x);

// One bounded scalar noise component. Only the uniform kind exists for
// now; moments are cached at construction so NoiseSpec extensions need
// only new formulas here.
struct UniformComponent {
  double a = 0.0;
  double b = 1.0;
  double mu2 = 0.0;  // central moments
  double mu3 = 0.0;
  double mu4 = 0.0;

  static UniformComponent make(double a, double b);
  double mean() const { return 0.5 * (a + b); }
  double width() const { return b - a; }
};

// Per-stage, componentwise independent bounded noise. Stage t (1-based)
// lives at stages[t-1]; the scalar grid engine requires one component
// per stage, the LQR oracle allows n.
struct NoiseSpec {
  std::vector<std::vector<UniformComponent>> stages;

  int horizon() const { return static_cast<int>(stages.size()); }
  int dim(int t) const { return static_cast<int>(stages[static_cast<std::size_t>(t - 1)].size()); }
  const UniformComponent& scalar(int t) const;
  static NoiseSpec iid_scalar(int horizon, double a, double b);
};

// Stage dynamics/cost come in concrete flavors so the DP kernels can
// inline them; CallbackStage is the generic escape hatch.
struct LqrScalarStage {
  double a = 1.0, b = 1.0;  // dynamics  a*x + b*u + xi
  double q = 1.0, r = 1.0;  // cost      q*x^2 + r*u^2
  double cost(double x, double u, double) const { return q * x * x + r * u * u; }
  double dynamics(double x, double u, double xi) const { return a * x + b * u + xi; }
};

struct InventoryStage {
  double order_cost = 1.0;      // c_t
  double backorder_cost = 3.0;  // b_t
  double holding_cost = 1.0;    // h_t
  double cost(double x, double u, double xi) const {
    const double s = x + u - xi;
    return order_cost * u + (s < 0.0 ? -backorder_cost * s : holding_cost * s);
  }
  double dynamics(double x, double u, double xi) const { return x + u - xi; }
};

struct CallbackStage {
  std::function<double(double, double, double)> cost;
  std::function<double(double, double, double)> dynamics;
};

struct StageModel {
  std::variant<LqrScalarStage, InventoryStage, CallbackStage> kernel;
  double u_lo = 0.0;
  double u_hi = 1.0;
  bool convex = true;  // asserts u -> averaged objective is unimodal

  double cost(double x, double u, double xi) const;
  double dynamics(double x, double u, double xi) const;
};

struct ProblemInstance {
  int horizon = 1;                                // T
  double initial_state = 0.0;                     // x_1
  std::vector<StageModel> stages;                 // t = 1..T
  std::function<double(double)> terminal_cost;    // f_{T+1}
  std::vector<StateGrid> grids;                   // t = 1..T+1
  NoiseSpec noise;

  void validate() const;
  const StageModel& stage(int t) const { return stages[static_cast<std::size_t>(t - 1)]; }
  const StateGrid& grid(int t) const { return grids[static_cast<std::size_t>(t - 1)]; }
};

// Tabulates f_{T+1} on the stage-(T+1) grid; shared by the true and SAA
// engines.
GridValueFunction terminal_value(const ProblemInstance& problem);

}  // namespace saadp
