#include "saadp/mc.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace saadp::mc {

namespace {

void fill_rows(const ReplicationConfig& config, ErrorSampleMatrix& out, int r_begin, int r_end) {
  const std::size_t cells = config.eval_points.size();
  const double scale = std::sqrt(static_cast<double>(config.sample_size));
  for (int r = r_begin; r < r_end; ++r) {
    const auto& noise =
        config.engine == Engine::GridDp ? config.problem->noise : config.lqr_model->noise;
    const SamplePool pool = draw_pool(config.plan, static_cast<std::uint64_t>(r), config.sample_size, noise);
    double* row = out.data.data() + static_cast<std::size_t>(r) * cells;
    if (config.engine == Engine::GridDp) {
      const DpSolution saa = backward_induction(*config.problem, DpMode::Saa, &pool);
      for (std::size_t c = 0; c < cells; ++c) {
        const auto& pt = config.eval_points[c];
        row[c] = scale * (grid_eval(saa.value(pt.stage), pt.state) -
                          grid_eval(config.true_solution->value(pt.stage), pt.state));
      }
    } else {
      const lqr::SaaClosedForm cf = lqr::saa_closed_form(*config.lqr_model, *config.riccati, pool);
      for (std::size_t c = 0; c < cells; ++c) {
        const auto& pt = config.eval_points[c];
        const auto x = lqr::scalar_state(pt.state);
        row[c] = scale * (cf.value(pt.stage, *config.riccati, x) - config.riccati->value(pt.stage, x));
      }
    }
  }
}

}  // namespace

ErrorSampleMatrix run_replications(const ReplicationConfig& config) {
  if (config.sample_size < 1) throw ConfigError("run_replications: sample size must be >= 1");
  if (config.replications < 2) throw ConfigError("run_replications: need at least 2 replications");
  if (config.eval_points.empty()) throw ConfigError("run_replications: no evaluation points");
  if (config.engine == Engine::GridDp && (config.problem == nullptr || config.true_solution == nullptr))
    throw ConfigError("run_replications: grid engine needs problem and true solution");
  if (config.engine == Engine::LqrClosedForm && (config.lqr_model == nullptr || config.riccati == nullptr))
    throw ConfigError("run_replications: closed-form engine needs LQR model and Riccati solution");
  const int T = config.engine == Engine::GridDp ? config.problem->horizon : config.lqr_model->horizon;
  for (const auto& pt : config.eval_points)
    if (pt.stage < 1 || pt.stage > T) throw ConfigError("run_replications: evaluation stage out of range");

  ErrorSampleMatrix out;
  out.replications = config.replications;
  out.eval_points = config.eval_points;
  out.data.resize(static_cast<std::size_t>(config.replications) * config.eval_points.size());

  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    fill_rows(config, out, 0, config.replications);
  } else {
    // Rows are preassigned, so scheduling cannot change the result.
    std::vector<std::thread> pool;
    const int chunk = (config.replications + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(config.replications, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] { fill_rows(config, out, lo, hi); });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
  const double q = std::min(p, 1.0 - p);
  // Abramowitz-Stegun 26.2.23 rational start, then Newton on the CDF.
  const double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
  if (p < 0.5) x = -x;
  for (int i = 0; i < 4; ++i) {
    const double err = normal_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0.0) break;
    x -= err / pdf;
  }
  return x;
}

StatsSummary summarize(const ErrorSampleMatrix& errors) {
  const int R = errors.replications;
  if (R < 2) throw ConfigError("summarize: need at least 2 replications");
  StatsSummary summary;
  const std::size_t cells = errors.eval_points.size();
  for (std::size_t c = 0; c < cells; ++c) {
    CellSummary cell;
    cell.point = errors.eval_points[c];
    std::vector<double> sample(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) sample[static_cast<std::size_t>(r)] = errors.at(r, static_cast<int>(c));

    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= R;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    cell.mean = mean;
    cell.variance = ss / (R - 1);
    cell.var_ci_halfwidth = cell.variance * std::sqrt(2.0 / (R - 1));

    std::sort(sample.begin(), sample.end());
    const double lo = sample.front(), hi = sample.back();
    constexpr int kBins = 50;
    cell.histogram.edges.resize(kBins + 1);
    cell.histogram.counts.assign(kBins, 0);
    const double width = hi > lo ? (hi - lo) / kBins : 1.0;
    for (int b = 0; b <= kBins; ++b) cell.histogram.edges[static_cast<std::size_t>(b)] = lo + b * width;
    for (double v : sample) {
      int b = static_cast<int>((v - lo) / width);
      if (b >= kBins) b = kBins - 1;
      cell.histogram.counts[static_cast<std::size_t>(b)]++;
    }

    if (cell.variance > 0.0) {
      const double sd = std::sqrt(cell.variance);
      double ks = 0.0;
      double qq_num = 0.0, qq_dd = 0.0, qq_tt = 0.0;
      double th_mean = 0.0;
      std::vector<double> theo(static_cast<std::size_t>(R));
      for (int i = 0; i < R; ++i) {
        theo[static_cast<std::size_t>(i)] = mean + sd * normal_quantile((i + 0.5) / R);
        th_mean += theo[static_cast<std::size_t>(i)];
      }
      th_mean /= R;
      for (int i = 0; i < R; ++i) {
        const double z = sample[static_cast<std::size_t>(i)];
        const double f = normal_cdf((z - mean) / sd);
        ks = std::max(ks, std::max((i + 1.0) / R - f, f - static_cast<double>(i) / R));
        const double dd = z - mean;
        const double tt = theo[static_cast<std::size_t>(i)] - th_mean;
        qq_num += dd * tt;
        qq_dd += dd * dd;
        qq_tt += tt * tt;
      }
      cell.ks_stat = ks;
      cell.qq_corr = qq_num / std::sqrt(qq_dd * qq_tt);
    }
    summary.cells.push_back(std::move(cell));
  }
  return summary;
}

}  // namespace saadp::mc
