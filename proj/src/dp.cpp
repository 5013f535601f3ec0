#include "saadp/dp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace saadp {

QuadratureRule QuadratureRule::gauss_legendre(double a, double b, int q) {
  if (q < 1) throw ConfigError("quadrature: need at least one node");
  if (!(a < b)) throw ConfigError("quadrature: need a < b");
  QuadratureRule rule;
  rule.support_lo = a;
  rule.support_hi = b;
  rule.nodes.resize(static_cast<std::size_t>(q));
  rule.weights.resize(static_cast<std::size_t>(q));
  // Newton iteration on the roots of the Legendre polynomial P_q.
  const int half = (q + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] -> [a,b]; normalize weights to sum to 1.
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (a + b) - 0.5 * (b - a) * x;
    rule.nodes[static_cast<std::size_t>(q - 1 - i)] = 0.5 * (a + b) + 0.5 * (b - a) * x;
    rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
    rule.weights[static_cast<std::size_t>(q - 1 - i)] = 0.5 * w;
  }
  return rule;
}

namespace {

// Averaged stage objective sum_i w_i [f(x,u,xi_i) + V(F(x,u,xi_i))],
// specialized per stage kernel so the sample loop inlines.
template <class Kernel, bool Weighted>
double stage_objective(const Kernel& kern, double x, double u, std::span<const double> xi,
                       std::span<const double> w, const GridValueFunction& v, std::uint64_t& extrap) {
  const double lo = v.grid.lo;
  const double inv_h = 1.0 / v.grid.spacing();
  const int k_max = v.grid.n_nodes - 2;
  const double p_max = static_cast<double>(v.grid.n_nodes - 1);
  const double* vv = v.values.data();
  std::uint64_t out_of_grid = 0;
  auto term_at = [&](std::size_t i) {
    const double y = kern.dynamics(x, u, xi[i]);
    const double p = (y - lo) * inv_h;
    out_of_grid += (p < 0.0) + (p > p_max);
    int k = static_cast<int>(p);
    if (k < 0) k = 0;
    if (k > k_max) k = k_max;
    const double val = vv[k] + (p - k) * (vv[k + 1] - vv[k]);
    const double term = kern.cost(x, u, xi[i]) + val;
    if constexpr (Weighted)
      return w[i] * term;
    else
      return term;
  };
  // Four independent partial sums keep the FP add latency chain off the
  // critical path; summation order is fixed, so results stay bit-stable.
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  const std::size_t n4 = xi.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    acc0 += term_at(i);
    acc1 += term_at(i + 1);
    acc2 += term_at(i + 2);
    acc3 += term_at(i + 3);
  }
  for (std::size_t i = n4; i < xi.size(); ++i) acc0 += term_at(i);
  double acc = (acc0 + acc1) + (acc2 + acc3);
  extrap += out_of_grid;
  if constexpr (!Weighted) acc /= static_cast<double>(xi.size());
  if (!std::isfinite(acc)) throw ModelError("bellman: non-finite stage objective");
  return acc;
}

template <bool Weighted>
BellmanResult bellman_impl(const GridValueFunction& v_next, const StageModel& stage,
                           std::span<const double> xi, std::span<const double> w, const StateGrid& grid) {
  v_next.validate();
  BellmanResult out;
  out.value.stage = v_next.stage - 1;
  out.value.grid = grid;
  out.value.values.resize(static_cast<std::size_t>(grid.n_nodes));
  out.policy.stage = v_next.stage - 1;
  out.policy.grid = grid;
  out.policy.controls.resize(static_cast<std::size_t>(grid.n_nodes));
  std::visit(
      [&](const auto& kern) {
        for (int n = 0; n < grid.n_nodes; ++n) {
          const double x = grid.node(n);
          auto obj = [&](double u) {
            return stage_objective<std::decay_t<decltype(kern)>, Weighted>(kern, x, u, xi, w, v_next,
                                                                           out.extrapolated_evals);
          };
          ScalarMin m = stage.u_hi > stage.u_lo
                            ? golden_section_min(stage.u_lo, stage.u_hi, kControlTolerance, obj)
                            : ScalarMin{stage.u_lo, obj(stage.u_lo)};
          out.value.values[static_cast<std::size_t>(n)] = m.value;
          out.policy.controls[static_cast<std::size_t>(n)] = m.arg;
        }
      },
      stage.kernel);
  return out;
}

// Exact expectation of the inventory objective under Uniform(a,b) demand.
// With s = x + u - xi, the integrand b[-s]_+ + h[s]_+ + V(s) is piecewise
// linear with kinks at s = 0 and at the grid nodes, so trapezoids between
// consecutive kinks integrate it exactly. Quadrature across those kinks
// would wobble the minimizer and break basestock constancy.
double inventory_exact_objective(const InventoryStage& kern, double x, double u, double a, double b,
                                 const GridValueFunction& v, std::uint64_t& extrap) {
  const StateGrid& g = v.grid;
  const double y = x + u;
  const double lo_s = y - b, hi_s = y - a;
  extrap += (lo_s < g.lo) + (hi_s > g.hi);
  auto W = [&](double s) {
    return kern.backorder_cost * std::max(-s, 0.0) + kern.holding_cost * std::max(s, 0.0) +
           grid_interp(g, v.values, s);
  };
  double prev_s = lo_s, prev_w = W(lo_s), acc = 0.0;
  auto advance = [&](double s) {
    const double w2 = W(s);
    acc += 0.5 * (prev_w + w2) * (s - prev_s);
    prev_s = s;
    prev_w = w2;
  };
  bool zero_done = !(lo_s < 0.0 && 0.0 < hi_s);
  int i = static_cast<int>(std::ceil((lo_s - g.lo) / g.spacing()));
  if (i < 0) i = 0;
  for (; i < g.n_nodes; ++i) {
    const double s = g.node(i);
    if (s >= hi_s) break;
    if (!zero_done && 0.0 < s) {
      advance(0.0);
      zero_done = true;
    }
    if (s > lo_s) advance(s);
  }
  if (!zero_done) advance(0.0);
  advance(hi_s);
  const double out = kern.order_cost * u + acc / (b - a);
  if (!std::isfinite(out)) throw ModelError("bellman: non-finite stage objective");
  return out;
}

BellmanResult bellman_inventory_exact(const GridValueFunction& v_next, const StageModel& stage,
                                      const InventoryStage& kern, double a, double b, const StateGrid& grid) {
  v_next.validate();
  BellmanResult out;
  out.value.stage = v_next.stage - 1;
  out.value.grid = grid;
  out.value.values.resize(static_cast<std::size_t>(grid.n_nodes));
  out.policy.stage = v_next.stage - 1;
  out.policy.grid = grid;
  out.policy.controls.resize(static_cast<std::size_t>(grid.n_nodes));
  for (int n = 0; n < grid.n_nodes; ++n) {
    const double x = grid.node(n);
    auto obj = [&](double u) {
      return inventory_exact_objective(kern, x, u, a, b, v_next, out.extrapolated_evals);
    };
    ScalarMin m = stage.u_hi > stage.u_lo ? golden_section_min(stage.u_lo, stage.u_hi, kControlTolerance, obj)
                                          : ScalarMin{stage.u_lo, obj(stage.u_lo)};
    out.value.values[static_cast<std::size_t>(n)] = m.value;
    out.policy.controls[static_cast<std::size_t>(n)] = m.arg;
  }
  return out;
}

}  // namespace

BellmanResult bellman_true(const GridValueFunction& v_next, const StageModel& stage,
                           const QuadratureRule& quad, const StateGrid& grid) {
  if (const auto* inv = std::get_if<InventoryStage>(&stage.kernel);
      inv != nullptr && quad.support_lo < quad.support_hi)
    return bellman_inventory_exact(v_next, stage, *inv, quad.support_lo, quad.support_hi, grid);
  return bellman_impl<true>(v_next, stage, quad.nodes, quad.weights, grid);
}

BellmanResult bellman_saa(const GridValueFunction& v_next, const StageModel& stage,
                          std::span<const double> samples, const StateGrid& grid) {
  if (samples.empty()) throw ConfigError("bellman_saa: empty sample slice");
  return bellman_impl<false>(v_next, stage, samples, {}, grid);
}

DpSolution backward_induction(const ProblemInstance& problem, DpMode mode, const SamplePool* samples,
                              int quad_nodes) {
  problem.validate();
  if (mode == DpMode::Saa && samples == nullptr) throw ConfigError("backward_induction: saa mode needs samples");
  const int T = problem.horizon;
  DpSolution sol;
  sol.values.resize(static_cast<std::size_t>(T) + 1);
  sol.policies.resize(static_cast<std::size_t>(T));
  sol.values[static_cast<std::size_t>(T)] = terminal_value(problem);
  for (int t = T; t >= 1; --t) {
    const auto& v_next = sol.values[static_cast<std::size_t>(t)];
    BellmanResult r;
    if (mode == DpMode::True) {
      const auto& comp = problem.noise.scalar(t);
      const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, quad_nodes);
      r = bellman_true(v_next, problem.stage(t), quad, problem.grid(t));
    } else {
      r = bellman_saa(v_next, problem.stage(t), samples->stage(t), problem.grid(t));
    }
    sol.extrapolated_evals += r.extrapolated_evals;
    sol.values[static_cast<std::size_t>(t - 1)] = std::move(r.value);
    sol.policies[static_cast<std::size_t>(t - 1)] = std::move(r.policy);
  }
  return sol;
}

double CovarianceGrid::eval(double x, double y) const {
  const double h = grid.spacing();
  const int k_max = grid.n_nodes - 2;
  auto locate = [&](double z, int& k, double& f) {
    const double p = (z - grid.lo) / h;
    k = static_cast<int>(std::floor(p));
    if (k < 0) k = 0;
    if (k > k_max) k = k_max;
    f = p - k;
  };
  int ki, kj;
  double fi, fj;
  locate(x, ki, fi);
  locate(y, kj, fj);
  const double g00 = at(ki, kj), g01 = at(ki, kj + 1), g10 = at(ki + 1, kj), g11 = at(ki + 1, kj + 1);
  return (1 - fi) * ((1 - fj) * g00 + fj * g01) + fi * ((1 - fj) * g10 + fj * g11);
}

namespace {

// Interpolation weight vector e(y) on the covariance lattice, so that a
// bilinearly interpolated Gamma(y,y') equals e(y)^T Gamma e(y').
void add_interp_weights(const StateGrid& g, double y, double w, Eigen::VectorXd& into) {
  const double p = (y - g.lo) / g.spacing();
  int k = static_cast<int>(std::floor(p));
  if (k < 0) k = 0;
  if (k > g.n_nodes - 2) k = g.n_nodes - 2;
  const double f = p - k;
  into(k) += w * (1.0 - f);
  into(k + 1) += w * f;
}

// Catmull-Rom evaluation of a tabulated value function. The linear interpolant
// has O(h) kinks at every node, and a minimizer chasing that sawtooth lands up
// to O(h) away from the smooth objective's minimum; the covariance recursion
// is first-order sensitive to the policy, so that wobble dominates its error.
// A C^1 interpolant removes the kinks. Falls back to linear in the outermost
// cells and beyond the grid.
double grid_eval_cubic(const GridValueFunction& vf, double x) {
  const StateGrid& g = vf.grid;
  const double h = g.spacing();
  if (g.n_nodes < 4 || x < g.lo + h || x > g.hi - h) return grid_eval(vf, x);
  int i = static_cast<int>(std::floor((x - g.lo) / h));
  if (i < 1) i = 1;
  if (i > g.n_nodes - 3) i = g.n_nodes - 3;
  const double s = (x - g.node(i)) / h;
  const double p0 = vf.values[static_cast<std::size_t>(i - 1)];
  const double p1 = vf.values[static_cast<std::size_t>(i)];
  const double p2 = vf.values[static_cast<std::size_t>(i + 1)];
  const double p3 = vf.values[static_cast<std::size_t>(i + 2)];
  return 0.5 * (2.0 * p1 + (p2 - p0) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s +
                (3.0 * (p1 - p2) + p3 - p0) * s * s * s);
}

// Re-minimizes the one-step objective at x against the smoothed continuation
// to recover the policy without the tabulation wobble described above.
double refined_control(const StageModel& st, const GridValueFunction& v_next, const QuadratureRule& stage_quad,
                       double x, double fallback) {
  if (!(st.u_hi > st.u_lo)) return fallback;
  const auto obj = [&](double u) {
    double acc = 0.0;
    for (std::size_t a = 0; a < stage_quad.nodes.size(); ++a)
      acc += stage_quad.weights[a] * (st.cost(x, u, stage_quad.nodes[a]) +
                                      grid_eval_cubic(v_next, st.dynamics(x, u, stage_quad.nodes[a])));
    return acc;
  };
  return golden_section_min(st.u_lo, st.u_hi, kControlTolerance, obj).arg;
}

}  // namespace

std::vector<CovarianceGrid> propagate_covariance(const ProblemInstance& problem, const DpSolution& true_solution,
                                                 const QuadratureRule& quad, const StateGrid& cov_grid) {
  const int T = problem.horizon;
  if (true_solution.policies.size() != static_cast<std::size_t>(T))
    throw ConfigError("propagate_covariance: true solution incomplete");
  const int q = static_cast<int>(quad.nodes.size());
  const int n = cov_grid.n_nodes;
  std::vector<CovarianceGrid> out(static_cast<std::size_t>(T));
  Eigen::MatrixXd gamma_next = Eigen::MatrixXd::Zero(n, n);  // Gamma_{T+1} = 0
  for (int t = T; t >= 1; --t) {
    const auto& comp = problem.noise.scalar(t);
    const auto stage_quad = QuadratureRule::gauss_legendre(comp.a, comp.b, q);
    const auto& st = problem.stage(t);
    const auto& v_next = true_solution.value(t + 1);
    const auto& pol = true_solution.policy(t);

    Eigen::MatrixXd phi(n, q);          // Phi_t at (node i, quad node a)
    Eigen::MatrixXd next_weights(n, n); // column i: quadrature-averaged e(F(x_i,...))
    next_weights.setZero();
    Eigen::VectorXd col(n);
    for (int i = 0; i < n; ++i) {
      const double x = cov_grid.node(i);
      const double u = refined_control(st, v_next, stage_quad, x, policy_eval(pol, x));
      col.setZero();
      for (int a = 0; a < q; ++a) {
        const double xi = stage_quad.nodes[static_cast<std::size_t>(a)];
        const double w = stage_quad.weights[static_cast<std::size_t>(a)];
        const double y = st.dynamics(x, u, xi);
        phi(i, a) = st.cost(x, u, xi) + grid_eval(v_next, y);
        add_interp_weights(cov_grid, y, w, col);
      }
      next_weights.col(i) = col;
    }
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(stage_quad.weights.data(), q);
    const Eigen::VectorXd mean = phi * w;
    Eigen::MatrixXd gamma = phi * w.asDiagonal() * phi.transpose() - mean * mean.transpose();
    gamma.noalias() += next_weights.transpose() * gamma_next * next_weights;
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    auto& cg = out[static_cast<std::size_t>(t - 1)];
    cg.stage = t;
    cg.grid = cov_grid;
    cg.gamma.assign(gamma.data(), gamma.data() + static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    gamma_next = std::move(gamma);
  }
  return out;
}

VarianceSplit variance_decompose(const ProblemInstance& problem, const DpSolution& true_solution,
                                 const CovarianceGrid& gamma_next, int t, double x, int quad_nodes) {
  if (true_solution.policies.size() < static_cast<std::size_t>(t))
    throw ConfigError("variance_decompose: missing policy");
  const auto& comp = problem.noise.scalar(t);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, quad_nodes);
  const auto& st = problem.stage(t);
  const auto& v_next = true_solution.value(t + 1);
  const double u = refined_control(st, v_next, quad, x, policy_eval(true_solution.policy(t), x));

  VarianceSplit split;
  const auto& g = problem.grid(t);
  split.extrapolated = (x < g.lo || x > g.hi);

  const int q = quad_nodes;
  std::vector<double> next_state(static_cast<std::size_t>(q));
  double mean = 0.0, second = 0.0;
  for (int a = 0; a < q; ++a) {
    const double xi = quad.nodes[static_cast<std::size_t>(a)];
    const double w = quad.weights[static_cast<std::size_t>(a)];
    const double y = st.dynamics(x, u, xi);
    next_state[static_cast<std::size_t>(a)] = y;
    const double phi = st.cost(x, u, xi) + grid_eval(v_next, y);
    mean += w * phi;
    second += w * phi * phi;
  }
  split.current = second - mean * mean;
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      split.propagated += quad.weights[static_cast<std::size_t>(a)] * quad.weights[static_cast<std::size_t>(b)] *
                          gamma_next.eval(next_state[static_cast<std::size_t>(a)],
                                          next_state[static_cast<std::size_t>(b)]);
  split.asymptotic = split.current + split.propagated;
  return split;
}

OptimalValueVariance optimal_value_variance(const ProblemInstance& problem, const DpSolution& true_solution,
                                            std::uint64_t n_paths, const SeedPlan& plan) {
  if (n_paths < 2) throw ConfigError("optimal_value_variance: need at least 2 paths");
  const int T = problem.horizon;
  // Var(G_1(x_1)) = sum_t Var_xi(E_{x_t}[Phi_t(x_t, pi(x_t), xi)]), with the
  // expectation over an independent copy of the stage-t state. A single
  // trajectory estimates Var of the total cost instead, which double-counts
  // the state randomness (it adds E[Var(V_{t+1}(x_{t+1}) | x_t)] terms). Two
  // independent trajectories that share the stage evaluation noise eta_t give
  // the right target: Cov(U, U') = sum_t Var_xi(E_x[Phi_t]) exactly, because
  // the driving noises are independent while eta_t is common.
  std::vector<double> u(n_paths), u_prime(n_paths);
  for (std::uint64_t r = 0; r < n_paths; ++r) {
    RngStream rng = derive_stream(plan, r, T + 1);
    double x = problem.initial_state, x_prime = problem.initial_state;
    double total = 0.0, total_prime = 0.0;
    for (int t = 1; t <= T; ++t) {
      const auto& comp = problem.noise.scalar(t);
      const double omega = rng.next_uniform(comp.a, comp.b);
      const double omega_prime = rng.next_uniform(comp.a, comp.b);
      const double eta = rng.next_uniform(comp.a, comp.b);
      const auto& v_next = true_solution.value(t + 1);
      const double c = policy_eval(true_solution.policy(t), x);
      const double c_prime = policy_eval(true_solution.policy(t), x_prime);
      total += problem.stage(t).cost(x, c, eta) + grid_eval(v_next, problem.stage(t).dynamics(x, c, eta));
      total_prime += problem.stage(t).cost(x_prime, c_prime, eta) +
                     grid_eval(v_next, problem.stage(t).dynamics(x_prime, c_prime, eta));
      x = problem.stage(t).dynamics(x, c, omega);
      x_prime = problem.stage(t).dynamics(x_prime, c_prime, omega_prime);
    }
    u[r] = total;
    u_prime[r] = total_prime;
  }
  double mean_u = 0.0, mean_up = 0.0;
  for (std::uint64_t r = 0; r < n_paths; ++r) {
    mean_u += u[r];
    mean_up += u_prime[r];
  }
  mean_u /= static_cast<double>(n_paths);
  mean_up /= static_cast<double>(n_paths);
  double cov = 0.0, second = 0.0;
  for (std::uint64_t r = 0; r < n_paths; ++r) {
    const double p = (u[r] - mean_u) * (u_prime[r] - mean_up);
    cov += p;
    second += p * p;
  }
  OptimalValueVariance out;
  out.variance = cov / static_cast<double>(n_paths - 1);
  const double var_of_products =
      second / static_cast<double>(n_paths) - (cov / static_cast<double>(n_paths)) * (cov / static_cast<double>(n_paths));
  out.ci_halfwidth = 1.96 * std::sqrt(std::max(var_of_products, 0.0) / static_cast<double>(n_paths));
  return out;
}

}  // namespace saadp
