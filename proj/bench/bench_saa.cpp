#include <chrono>
#include <cstdio>
#include "saadp/cli.hpp"
#include "saadp/dp.hpp"
#include "saadp/lqr.hpp"
int main() {
  using namespace saadp;
  auto cfg = cli::preset("lqr-benchmark");
  ProblemInstance p = cli::build_problem(cfg);
  SeedPlan plan{1};
  auto pool = draw_pool(plan, 0, 1000, p.noise);
  auto t0 = std::chrono::steady_clock::now();
  DpSolution sol = backward_induction(p, DpMode::Saa, &pool);
  auto t1 = std::chrono::steady_clock::now();
  std::printf("one SAA backward induction: %.2f s, V1(1)=%.6f extrap=%llu\n",
              std::chrono::duration<double>(t1 - t0).count(), grid_eval(sol.value(1), 1.0),
              (unsigned long long)sol.extrapolated_evals);
  auto model = lqr::LqrModel::scalar_benchmark(20, cfg.noise_half_width);
  auto ric = lqr::riccati_backward(model);
  auto cf = lqr::saa_closed_form(model, ric, pool);
  std::printf("closed form V1(1)=%.6f\n", cf.value(1, ric, lqr::scalar_state(1.0)));
  return 0;
}
