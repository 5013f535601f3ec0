#include <doctest.h>

#include <cmath>

#include "saadp/model.hpp"

using namespace saadp;

namespace {

GridValueFunction make_vf(std::vector<double> values, double lo, double hi) {
  GridValueFunction vf;
  vf.grid = build_grid(lo, hi, static_cast<int>(values.size()));
  vf.values = std::move(values);
  return vf;
}

}  // namespace

TEST_CASE("grid_eval: nodes, midpoints, extrapolation") {
  const auto vf = make_vf({0.0, 1.0, 4.0}, 0.0, 2.0);
  CHECK(grid_eval(vf, 1.0) == doctest::Approx(1.0));
  CHECK(grid_eval(vf, 0.5) == doctest::Approx(0.5));
  // Beyond the last node: extend with slope (4-1)/1.
  CHECK(grid_eval(vf, 3.0) == doctest::Approx(7.0));
  CHECK(grid_eval(vf, -1.0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(grid_eval(vf, std::nan("")), std::domain_error);
}

TEST_CASE("grid_eval reproduces affine functions everywhere") {
  GridValueFunction vf;
  vf.grid = build_grid(-2.0, 3.0, 11);
  for (int i = 0; i < 11; ++i) vf.values.push_back(2.5 * vf.grid.node(i) - 0.75);
  for (double x : {-5.0, -2.0, -1.93, 0.0, 1.27, 3.0, 8.5})
    CHECK(grid_eval(vf, x) == doctest::Approx(2.5 * x - 0.75).epsilon(1e-12));
}

TEST_CASE("grid_eval Lipschitz bound from max adjacent slope") {
  const auto vf = make_vf({0.0, 3.0, 1.0, 4.0, 4.5}, 0.0, 4.0);
  const double L = 3.0;  // max |adjacent difference| / h with h = 1
  for (double x = -1.0; x < 5.0; x += 0.137)
    for (double y = -1.0; y < 5.0; y += 0.211)
      CHECK(std::abs(grid_eval(vf, x) - grid_eval(vf, y)) <= L * std::abs(x - y) + 1e-12);
}

TEST_CASE("build_grid spacing and endpoints") {
  const auto g = build_grid(-1.0, 1.0, 3);
  CHECK(g.nodes() == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(build_grid(0.0, 10.0, 101).spacing() == doctest::Approx(0.1));
  CHECK(build_grid(-8.0, 8.0, 1601).spacing() == doctest::Approx(0.01));
  CHECK_THROWS_AS(build_grid(1.0, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 1), ConfigError);
}

TEST_CASE("uniform component moments") {
  const auto c = UniformComponent::make(-2.0, 2.0);
  CHECK(c.mean() == 0.0);
  CHECK(c.mu2 == doctest::Approx(4.0 / 3.0));
  CHECK(c.mu3 == 0.0);
  CHECK(c.mu4 == doctest::Approx(16.0 / 5.0));
  CHECK(c.mu4 >= c.mu2 * c.mu2);  // Jensen
  CHECK_THROWS_AS(UniformComponent::make(1.0, 1.0), ModelError);
}

namespace {

ProblemInstance tiny_quadratic_problem() {
  ProblemInstance p;
  p.horizon = 1;
  p.initial_state = 0.0;
  StageModel st;
  st.kernel = LqrScalarStage{};
  st.u_lo = -1.0;
  st.u_hi = 1.0;
  p.stages = {st};
  p.terminal_cost = [](double x) { return x * x; };
  p.grids = {build_grid(-4.0, 4.0, 9), build_grid(-4.0, 4.0, 9)};
  p.noise = NoiseSpec::iid_scalar(1, -0.5, 0.5);
  return p;
}

}  // namespace

TEST_CASE("terminal_value tabulates f_{T+1}") {
  const auto p = tiny_quadratic_problem();
  const auto vf = terminal_value(p);
  CHECK(vf.stage == 2);
  CHECK(grid_eval(vf, 2.0) == doctest::Approx(4.0));
  CHECK(grid_eval(vf, 0.0) == doctest::Approx(0.0));
  CHECK(grid_eval(vf, -3.0) == doctest::Approx(9.0));
}

TEST_CASE("terminal_value interpolation error bound for quadratics") {
  ProblemInstance p = tiny_quadratic_problem();
  p.grids = {build_grid(-4.0, 4.0, 81), build_grid(-4.0, 4.0, 81)};
  const auto vf = terminal_value(p);
  const double h = vf.grid.spacing();
  const double bound = 2.0 * h * h / 8.0;  // max |f''| = 2
  for (double x = -4.0; x <= 4.0; x += 0.0137) {
    CHECK(grid_eval(vf, x) - x * x >= -1e-12);  // linear interp overestimates convex f
    CHECK(grid_eval(vf, x) - x * x <= bound + 1e-12);
  }
}

TEST_CASE("terminal_value rejects non-finite costs") {
  ProblemInstance p = tiny_quadratic_problem();
  p.terminal_cost = [](double x) { return x > 3.0 ? std::nan("") : 0.0; };
  CHECK_THROWS_AS(terminal_value(p), ModelError);
}

TEST_CASE("problem validation catches structural errors") {
  ProblemInstance p = tiny_quadratic_problem();
  CHECK_NOTHROW(p.validate());
  p.horizon = 0;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = tiny_quadratic_problem();
  p.grids.pop_back();
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = tiny_quadratic_problem();
  p.stages[0].u_hi = -2.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
}
