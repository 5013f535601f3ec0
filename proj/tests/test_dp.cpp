#include <doctest.h>

#include <cmath>

#include "saadp/cli.hpp"
#include "saadp/dp.hpp"
#include "saadp/lqr.hpp"

using namespace saadp;

namespace {

ProblemInstance lqr_grid_problem(int horizon = 20, int nodes = 1601) {
  cli::RunConfig cfg = cli::preset("lqr-benchmark");
  cfg.horizon = horizon;
  cfg.grid_nodes = nodes;
  if (horizon < 20) cfg.eval_stages = {1};
  return cli::build_problem(cfg);
}

double quadrature_variance(const ProblemInstance& p, const DpSolution& sol, int t, double x, int q = 256) {
  const auto& comp = p.noise.scalar(t);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, q);
  const double u = policy_eval(sol.policy(t), x);
  double m = 0, s = 0;
  for (std::size_t a = 0; a < quad.nodes.size(); ++a) {
    const double phi =
        p.stage(t).cost(x, u, quad.nodes[a]) + grid_eval(sol.value(t + 1), p.stage(t).dynamics(x, u, quad.nodes[a]));
    m += quad.weights[a] * phi;
    s += quad.weights[a] * phi * phi;
  }
  return s - m * m;
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials of degree 2Q-1 exactly") {
  const auto quad = QuadratureRule::gauss_legendre(0.0, 1.0, 4);
  double wsum = 0, x7 = 0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    wsum += quad.weights[i];
    x7 += quad.weights[i] * std::pow(quad.nodes[i], 7);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x7 == doctest::Approx(1.0 / 8.0).epsilon(1e-13));  // E[X^7], X ~ U(0,1)
  CHECK_THROWS_AS(QuadratureRule::gauss_legendre(1.0, 0.0, 4), ConfigError);
}

TEST_CASE("golden section finds the minimum, ties break to smaller u") {
  const auto m = golden_section_min(-2.0, 3.0, 1e-10, [](double u) { return (u - 1.0) * (u - 1.0); });
  CHECK(m.arg == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.value == doctest::Approx(0.0).epsilon(1e-12));
  // Flat plateau on [0,1]: the left end wins.
  const auto flat = golden_section_min(-1.0, 2.0, 1e-10, [](double u) { return std::max({-u, 0.0, u - 1.0}); });
  CHECK(flat.arg <= 0.5);
  CHECK(flat.value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bellman_true one LQR step reproduces the Riccati value") {
  const ProblemInstance p = lqr_grid_problem(1);
  const auto v_terminal = terminal_value(p);
  const auto& comp = p.noise.scalar(1);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, 64);
  const auto r = bellman_true(v_terminal, p.stage(1), quad, p.grid(1));
  // P_T = 1.5, q_T = E[xi^2] * 1 = 1, so V_T(1) = 2.5.
  CHECK(grid_eval(r.value, 1.0) == doctest::Approx(2.5).epsilon(1e-4));
  CHECK(policy_eval(r.policy, 1.0) == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("bellman with zero cost-to-go and cost u^2 is zero at u*=0") {
  ProblemInstance p = lqr_grid_problem(1, 81);
  GridValueFunction zero;
  zero.stage = 2;
  zero.grid = p.grid(2);
  zero.values.assign(static_cast<std::size_t>(zero.grid.n_nodes), 0.0);
  StageModel st;
  st.kernel = CallbackStage{[](double, double u, double) { return u * u; },
                            [](double x, double u, double xi) { return x + u + xi; }};
  st.u_lo = -2.0;
  st.u_hi = 2.0;
  const auto& comp = p.noise.scalar(1);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, 16);
  const auto r = bellman_true(zero, st, quad, p.grid(1));
  for (double v : r.value.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  for (double u : r.policy.controls) CHECK(std::abs(u) < 1e-7);
}

TEST_CASE("bellman translation identity and monotonicity") {
  const ProblemInstance p = lqr_grid_problem(1, 161);
  const auto& comp = p.noise.scalar(1);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, 32);
  GridValueFunction v = terminal_value(p);
  GridValueFunction v_shift = v;
  const double kappa = 3.25;
  for (auto& x : v_shift.values) x += kappa;
  const auto base = bellman_true(v, p.stage(1), quad, p.grid(1));
  const auto shifted = bellman_true(v_shift, p.stage(1), quad, p.grid(1));
  for (int i = 0; i < base.value.grid.n_nodes; ++i) {
    CHECK(shifted.value.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(base.value.values[static_cast<std::size_t>(i)] + kappa).epsilon(1e-10));
    // v <= v + kappa nodewise implies the same for the Bellman images.
    CHECK(base.value.values[static_cast<std::size_t>(i)] <=
          shifted.value.values[static_cast<std::size_t>(i)] + 1e-12);
  }
}

TEST_CASE("bellman_saa with all samples equal collapses to a point mass") {
  const ProblemInstance p = lqr_grid_problem(1, 161);
  const auto v_terminal = terminal_value(p);
  const double c = 0.37;
  const std::vector<double> samples(5, c);
  const auto saa = bellman_saa(v_terminal, p.stage(1), samples, p.grid(1));
  QuadratureRule point;
  point.nodes = {c};
  point.weights = {1.0};
  const auto truth = bellman_true(v_terminal, p.stage(1), point, p.grid(1));
  for (int i = 0; i < saa.value.grid.n_nodes; ++i)
    CHECK(saa.value.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(truth.value.values[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("bellman_saa with all-zero samples matches the zero-sample closed form") {
  const int T = 3;
  ProblemInstance p = lqr_grid_problem(T, 1601);
  SamplePool pool;
  pool.sample_size = 1;
  pool.stage_samples.assign(T, {0.0});
  pool.stage_dims.assign(T, 1);
  const DpSolution sol = backward_induction(p, DpMode::Saa, &pool);
  const auto model = lqr::LqrModel::scalar_benchmark(T, std::sqrt(3.0));
  const auto ric = lqr::riccati_backward(model);
  // k-hat = q-hat = 0, so V-hat_t(x) = P_t x^2.
  for (int t = 1; t <= T; ++t)
    for (double x : {-2.0, -0.5, 0.0, 1.0, 2.0})
      CHECK(grid_eval(sol.value(t), x) == doctest::Approx(ric.p(t)(0, 0) * x * x).epsilon(2e-4));
}

TEST_CASE("grid bellman_saa matches the Lemma-style closed form at N=1000") {
  const ProblemInstance p = lqr_grid_problem();
  const auto pool = draw_pool(SeedPlan{2024}, 0, 1000, p.noise);
  const DpSolution sol = backward_induction(p, DpMode::Saa, &pool);
  const auto model = lqr::LqrModel::scalar_benchmark(20, std::sqrt(3.0));
  const auto ric = lqr::riccati_backward(model);
  const auto cf = lqr::saa_closed_form(model, ric, pool);
  double max_err = 0;
  for (int t = 1; t <= 20; ++t)
    for (double x = -6.0; x <= 6.0; x += 0.25)
      max_err = std::max(max_err,
                         std::abs(grid_eval(sol.value(t), x) - cf.value(t, ric, lqr::scalar_state(x))));
  CHECK(max_err <= 1e-3);
}

TEST_CASE("backward induction with T=1 is a single Bellman application") {
  const ProblemInstance p = lqr_grid_problem(1, 401);
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto v_terminal = terminal_value(p);
  const auto& comp = p.noise.scalar(1);
  const auto quad = QuadratureRule::gauss_legendre(comp.a, comp.b, 64);
  const auto single = bellman_true(v_terminal, p.stage(1), quad, p.grid(1));
  CHECK(sol.value(1).values == single.value.values);
  CHECK_THROWS_AS(backward_induction(p, DpMode::Saa, nullptr), ConfigError);
}

TEST_CASE("true backward induction matches the Riccati oracle") {
  const ProblemInstance p = lqr_grid_problem();
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto model = lqr::LqrModel::scalar_benchmark(20, std::sqrt(3.0));
  const auto ric = lqr::riccati_backward(model);
  CHECK(grid_eval(sol.value(1), 1.0) ==
        doctest::Approx(ric.p(1)(0, 0) + ric.offset(1)).epsilon(1e-3));
  for (int t : {1, 10, 20})
    CHECK(policy_eval(sol.policy(t), 1.0) == doctest::Approx(ric.gain(t)(0, 0)).epsilon(1e-3));
}

TEST_CASE("covariance propagation against the asymptotic-law oracle") {
  const ProblemInstance p = lqr_grid_problem();
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto quad = QuadratureRule::gauss_legendre(-1.0, 1.0, 64);
  const StateGrid cov_grid = build_grid(-8.0, 8.0, 401);
  const auto gammas = propagate_covariance(p, sol, quad, cov_grid);
  REQUIRE(gammas.size() == 20);

  const auto model = lqr::LqrModel::scalar_benchmark(20, std::sqrt(3.0));
  const auto ric = lqr::riccati_backward(model);
  const auto law = lqr::asymptotic_recursion(model, ric);

  SUBCASE("last stage reproduces the terminal covariance: S_20 = 1, v_20 = 0.8") {
    CHECK(gammas[19].eval(1.0, 1.0) == doctest::Approx(1.8).epsilon(1e-3));
  }
  SUBCASE("last-stage diagonal equals the current-stage variance") {
    for (double x : {-1.0, 0.0, 0.7})
      CHECK(gammas[19].eval(x, x) == doctest::Approx(quadrature_variance(p, sol, 20, x)).epsilon(1e-6));
  }
  SUBCASE("symmetry and near-nonnegative diagonal") {
    const auto& g = gammas[0];
    for (int i = 0; i < g.grid.n_nodes; i += 37) {
      CHECK(g.at(i, i) >= -1e-9);
      for (int j = 0; j < g.grid.n_nodes; j += 41) CHECK(g.at(i, j) == g.at(j, i));
    }
  }
  SUBCASE("variance decomposition matches the LQR oracle at t=19, x=1/2") {
    const auto split = variance_decompose(p, sol, gammas[19], 19, 0.5);
    const auto d = lqr::variance_decomposition(law, ric, model, 19, lqr::scalar_state(0.5));
    CHECK(split.current == doctest::Approx(d.current).epsilon(1e-3));
    CHECK(split.propagated == doctest::Approx(d.propagated).epsilon(1e-3));
    CHECK(split.asymptotic == split.current + split.propagated);  // exact by construction
  }
  SUBCASE("decomposition at the last stage has no propagated part") {
    CovarianceGrid zero;
    zero.stage = 21;
    zero.grid = cov_grid;
    zero.gamma.assign(static_cast<std::size_t>(cov_grid.n_nodes) * static_cast<std::size_t>(cov_grid.n_nodes),
                      0.0);
    const auto split = variance_decompose(p, sol, zero, 20, 1.0);
    CHECK(split.propagated == 0.0);
    CHECK(split.asymptotic == split.current);
  }
}

TEST_CASE("near-deterministic noise kills the covariance") {
  cli::RunConfig cfg = cli::preset("lqr-benchmark");
  cfg.horizon = 3;
  cfg.grid_nodes = 401;
  cfg.noise_half_width = 1e-12;
  cfg.eval_stages = {1};
  const ProblemInstance p = cli::build_problem(cfg);
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto quad = QuadratureRule::gauss_legendre(-1.0, 1.0, 16);
  const auto gammas = propagate_covariance(p, sol, quad, build_grid(-8.0, 8.0, 101));
  // The floor is set by cancellation in the covariance assembly, not by the
  // noise width itself.
  for (const auto& g : gammas)
    for (double v : g.gamma) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("optimal-value variance: single stage equals the quadrature variance") {
  const ProblemInstance p = lqr_grid_problem(1, 401);
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto est = optimal_value_variance(p, sol, 200000, SeedPlan{5});
  const double oracle = quadrature_variance(p, sol, 1, p.initial_state);
  CHECK(est.variance == doctest::Approx(oracle).epsilon(0.02));
  CHECK_THROWS_AS(optimal_value_variance(p, sol, 1, SeedPlan{5}), ConfigError);
}

TEST_CASE("optimal-value variance vanishes under near-deterministic noise") {
  cli::RunConfig cfg = cli::preset("lqr-benchmark");
  cfg.horizon = 2;
  cfg.grid_nodes = 201;
  cfg.noise_half_width = 1e-12;
  cfg.eval_stages = {1};
  const ProblemInstance p = cli::build_problem(cfg);
  const DpSolution sol = backward_induction(p, DpMode::True);
  const auto est = optimal_value_variance(p, sol, 1000, SeedPlan{5});
  CHECK(est.variance < 1e-20);
}
