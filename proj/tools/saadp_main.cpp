#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "saadp/cli.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

saadp::cli::RunConfig resolve(const CommonOpts& opts) {
  saadp::cli::RunConfig config;
  if (!opts.preset_name.empty() && !opts.config_path.empty())
    throw saadp::ConfigError("pass either --preset or --config, not both");
  if (!opts.preset_name.empty())
    config = saadp::cli::preset(opts.preset_name);
  else if (!opts.config_path.empty())
    config = saadp::cli::load_config(opts.config_path);
  else
    config = saadp::cli::preset("lqr-benchmark");
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.workers > 0) config.workers = opts.workers;
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration");
  cmd->add_option("--preset", opts.preset_name, "Named preset: lqr-benchmark, lqr-heavy-control, inventory-default");
  cmd->add_option("--seed", opts.seed, "Master seed override")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--workers", opts.workers, "Replication worker threads");
  cmd->add_option("--out", opts.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAA dynamic programming: value functions, asymptotic covariance, Monte Carlo validation"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* analytic = app.add_subcommand("lqr-analytic", "Riccati solution and asymptotic variance curves");
  auto* simulate = app.add_subcommand("simulate", "Replicated SAA error distribution");
  auto* covariance = app.add_subcommand("covariance", "Grid covariance propagation and variance decomposition");
  auto* optval = app.add_subcommand("optimal-value", "Optimal-value variance via trajectory simulation");
  for (auto* cmd : {analytic, simulate, covariance, optval}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const saadp::cli::RunConfig config = resolve(opts);
    if (analytic->parsed()) saadp::cli::cmd_lqr_analytic(config);
    if (simulate->parsed()) saadp::cli::cmd_simulate(config);
    if (covariance->parsed()) saadp::cli::cmd_covariance(config);
    if (optval->parsed()) saadp::cli::cmd_optimal_value(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
