#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "saadp/dp.hpp"
#include "saadp/lqr.hpp"
#include "saadp/model.hpp"
#include "saadp/sampling.hpp"

namespace saadp::mc {

enum class Engine { GridDp, LqrClosedForm };

struct EvalPoint {
  int stage = 1;
  double state = 0.0;
};

struct ReplicationConfig {
  int sample_size = 1000;     // N per stage
  int replications = 2;       // R
  std::vector<EvalPoint> eval_points;
  SeedPlan plan;
  Engine engine = Engine::LqrClosedForm;
  int workers = 1;
  // GridDp engine inputs.
  const ProblemInstance* problem = nullptr;
  const DpSolution* true_solution = nullptr;
  // LqrClosedForm engine inputs.
  const lqr::LqrModel* lqr_model = nullptr;
  const lqr::RiccatiSolution* riccati = nullptr;
};

// Replication x eval-point matrix of sqrt(N) (V-hat_{t,N}(x) - V_t(x)).
struct ErrorSampleMatrix {
  int replications = 0;
  std::vector<EvalPoint> eval_points;
  std::vector<double> data;  // row-major, row = replication

  double at(int r, int cell) const {
    return data[static_cast<std::size_t>(r) * eval_points.size() + static_cast<std::size_t>(cell)];
  }
};

ErrorSampleMatrix run_replications(const ReplicationConfig& config);

struct Histogram {
  std::vector<double> edges;   // 51 edges for 50 bins
  std::vector<int> counts;
};

struct CellSummary {
  EvalPoint point;
  double mean = 0.0;
  double variance = 0.0;        // unbiased
  double var_ci_halfwidth = 0.0;
  std::optional<double> ks_stat;   // vs normal with fitted moments
  std::optional<double> qq_corr;   // Pearson corr of sorted data vs fitted quantiles
  Histogram histogram;
};

struct StatsSummary {
  std::vector<CellSummary> cells;
};

StatsSummary summarize(const ErrorSampleMatrix& errors);

// Inverse standard-normal CDF (rational start + Newton polish), abs error
// well below 1e-8.
double normal_quantile(double p);

double normal_cdf(double x);

}  // namespace saadp::mc
