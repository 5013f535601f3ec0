#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saadp/model.hpp"
#include "saadp/sampling.hpp"

namespace saadp {

// Gauss-Legendre rule mapped to [a,b], weights normalized to sum to 1 so
// the weighted sum is the expectation under Uniform(a,b).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  // Support of the underlying distribution; known iff support_lo < support_hi.
  // Lets bellman_true integrate piecewise-linear integrands exactly instead
  // of committing quadrature error across their kinks.
  double support_lo = 0.0;
  double support_hi = -1.0;

  static QuadratureRule gauss_legendre(double a, double b, int q);
};

// Golden-section minimization of a unimodal objective on [lo, hi].
// Terminates when the bracket is below tol; ties break toward smaller u.
struct ScalarMin {
  double arg = 0.0;
  double value = 0.0;
};

template <class F>
ScalarMin golden_section_min(double lo, double hi, double tol, F&& f) {
  constexpr double inv_phi = 0.6180339887498949;  // 1/phi
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  ScalarMin best{c, fc};
  if (fd < best.value) best = {d, fd};
  while (b - a > tol) {
    if (fc <= fd) {  // keep the left interval on ties: smaller u wins
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc < best.value) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd < best.value) best = {d, fd};
    }
  }
  return best;
}

struct BellmanResult {
  GridValueFunction value;
  GridPolicy policy;
  std::uint64_t extrapolated_evals = 0;  // dynamics landed outside the next grid
};

constexpr double kControlTolerance = 1e-10;

BellmanResult bellman_true(const GridValueFunction& v_next, const StageModel& stage,
                           const QuadratureRule& quad, const StateGrid& grid);

BellmanResult bellman_saa(const GridValueFunction& v_next, const StageModel& stage,
                          std::span<const double> samples, const StateGrid& grid);

enum class DpMode { True, Saa };

struct DpSolution {
  // Index 0 holds stage 1; stage T+1 (terminal) is values.back() with no policy.
  std::vector<GridValueFunction> values;   // size T+1
  std::vector<GridPolicy> policies;        // size T
  std::uint64_t extrapolated_evals = 0;

  const GridValueFunction& value(int t) const { return values[static_cast<std::size_t>(t - 1)]; }
  const GridPolicy& policy(int t) const { return policies[static_cast<std::size_t>(t - 1)]; }
};

DpSolution backward_induction(const ProblemInstance& problem, DpMode mode,
                              const SamplePool* samples = nullptr, int quad_nodes = 64);

// Covariance function of the limit Gaussian error process, tabulated on
// a node lattice with bilinear interpolation.
struct CovarianceGrid {
  int stage = 0;
  StateGrid grid;
  std::vector<double> gamma;  // row-major n_nodes x n_nodes, symmetric

  double at(int i, int j) const {
    return gamma[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_nodes) + static_cast<std::size_t>(j)];
  }
  double eval(double x, double y) const;  // bilinear
};

// Backward recursion for the limit covariance: Gamma_{T+1} = 0 and
//   Gamma_t(x,x') = E_{xi,xi'}[Gamma_{t+1}(F(x,pi(x),xi), F(x',pi(x'),xi'))]
//                 + Cov_xi(Phi_t(x,pi(x),xi), Phi_t(x',pi(x'),xi)),
// with Phi_t = f_t + V_{t+1} o F_t. Returns grids for t = 1..T.
std::vector<CovarianceGrid> propagate_covariance(const ProblemInstance& problem,
                                                 const DpSolution& true_solution,
                                                 const QuadratureRule& quad,
                                                 const StateGrid& cov_grid);

struct VarianceSplit {
  double current = 0.0;     // Var over the stage-t noise of f_t + V_{t+1} o F_t
  double propagated = 0.0;  // Gamma_{t+1} averaged over two independent noise copies
  double asymptotic = 0.0;  // current + propagated, exactly
  bool extrapolated = false;
};

VarianceSplit variance_decompose(const ProblemInstance& problem, const DpSolution& true_solution,
                                 const CovarianceGrid& gamma_next, int t, double x, int quad_nodes = 64);

struct OptimalValueVariance {
  double variance = 0.0;
  double ci_halfwidth = 0.0;  // normal-theory sqrt(2/(n-1)) * variance
};

// Monte Carlo estimate of Gamma_1(x_1, x_1) from simulated optimal-policy
// trajectories: two independent state paths share each stage's evaluation
// noise, and the covariance of their accumulated stage objectives is
// unbiased for the limit variance (a single path's total-cost variance
// overshoots it by the variance of the future value functions).
OptimalValueVariance optimal_value_variance(const ProblemInstance& problem, const DpSolution& true_solution,
                                            std::uint64_t n_paths, const SeedPlan& plan);

}  // namespace saadp
