#include "saadp/cli.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace saadp::cli {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError(std::string("config: unknown key '") + key + "' in " + where);
  }
}

std::vector<double> per_stage(const json& v, int horizon, const char* what) {
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(horizon), v.get<double>());
  if (v.is_array()) {
    auto out = v.get<std::vector<double>>();
    if (static_cast<int>(out.size()) != horizon)
      throw ConfigError(std::string("config: ") + what + " length != horizon");
    return out;
  }
  throw ConfigError(std::string("config: ") + what + " must be a number or array");
}

std::ofstream open_output(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.output_dir);
  std::ofstream out(std::filesystem::path(config.output_dir) / name);
  if (!out) throw ConfigError("cannot open output file " + name);
  out.precision(17);
  return out;
}

std::string state_tag(double x) {
  std::ostringstream os;
  os << x;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

lqr::LqrModel lqr_model_of(const RunConfig& config) {
  return lqr::LqrModel::scalar_benchmark(config.horizon, config.noise_half_width);
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  const json doc = json::parse(json_text);
  reject_unknown_keys(doc, {"problem", "grids", "quadrature", "mc", "output"}, "document");
  RunConfig c;
  if (!doc.contains("problem")) throw ConfigError("config: missing 'problem' section");
  const json& prob = doc.at("problem");
  const std::string kind = prob.value("kind", "lqr");
  if (kind == "lqr") {
    c.kind = ProblemKind::Lqr;
    reject_unknown_keys(prob, {"kind", "horizon", "initial_state", "noise_half_width"}, "problem");
    c.horizon = prob.value("horizon", c.horizon);
    c.initial_state = prob.value("initial_state", c.initial_state);
    c.noise_half_width = prob.value("noise_half_width", c.noise_half_width);
  } else if (kind == "inventory") {
    c.kind = ProblemKind::Inventory;
    reject_unknown_keys(prob,
                        {"kind", "horizon", "initial_stock", "order_cost", "backorder_cost", "holding_cost",
                         "demand_max"},
                        "problem");
    c.horizon = prob.value("horizon", 5);
    auto& p = c.inventory_params;
    p = inventory::InventoryParams::defaults(c.horizon);
    p.initial_stock = prob.value("initial_stock", p.initial_stock);
    if (prob.contains("order_cost")) p.order_cost = per_stage(prob.at("order_cost"), c.horizon, "order_cost");
    if (prob.contains("backorder_cost"))
      p.backorder_cost = per_stage(prob.at("backorder_cost"), c.horizon, "backorder_cost");
    if (prob.contains("holding_cost"))
      p.holding_cost = per_stage(prob.at("holding_cost"), c.horizon, "holding_cost");
    if (prob.contains("demand_max")) p.demand_max = per_stage(prob.at("demand_max"), c.horizon, "demand_max");
    p.validate();
    c.initial_state = p.initial_stock;
    c.engine = mc::Engine::GridDp;
    // Inventory defaults: grid covers reachable states, controls in [0, cap].
    c.grid_lo = p.initial_stock - p.total_max_demand();
    c.grid_hi = p.initial_stock + p.total_max_demand();
    c.grid_nodes = 401;
    c.control_lo = 0.0;
    c.control_hi = p.total_max_demand();
    c.eval_stages = {1};
    c.eval_states = {p.initial_stock};
  } else {
    throw ConfigError("config: problem.kind must be 'lqr' or 'inventory'");
  }
  if (c.horizon < 1) throw ConfigError("config: horizon must be >= 1");

  if (doc.contains("grids")) {
    const json& g = doc.at("grids");
    reject_unknown_keys(g, {"lo", "hi", "n_nodes", "cov_nodes", "control_lo", "control_hi"}, "grids");
    c.grid_lo = g.value("lo", c.grid_lo);
    c.grid_hi = g.value("hi", c.grid_hi);
    c.grid_nodes = g.value("n_nodes", c.grid_nodes);
    c.cov_nodes = g.value("cov_nodes", c.cov_nodes);
    c.control_lo = g.value("control_lo", c.control_lo);
    c.control_hi = g.value("control_hi", c.control_hi);
  }
  if (doc.contains("quadrature")) {
    const json& q = doc.at("quadrature");
    reject_unknown_keys(q, {"q"}, "quadrature");
    c.quad_nodes = q.value("q", c.quad_nodes);
  }
  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    reject_unknown_keys(m, {"N", "R", "seed", "eval_states", "eval_stages", "workers", "paths", "engine"}, "mc");
    c.sample_size = m.value("N", c.sample_size);
    c.replications = m.value("R", c.replications);
    c.seed = m.value("seed", c.seed);
    if (m.contains("eval_states")) c.eval_states = m.at("eval_states").get<std::vector<double>>();
    if (m.contains("eval_stages")) c.eval_stages = m.at("eval_stages").get<std::vector<int>>();
    c.workers = m.value("workers", c.workers);
    c.paths = m.value("paths", c.paths);
    if (m.contains("engine")) {
      const std::string e = m.at("engine").get<std::string>();
      if (e == "grid-dp")
        c.engine = mc::Engine::GridDp;
      else if (e == "lqr-closed-form")
        c.engine = mc::Engine::LqrClosedForm;
      else
        throw ConfigError("config: mc.engine must be 'grid-dp' or 'lqr-closed-form'");
    }
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    reject_unknown_keys(o, {"dir"}, "output");
    c.output_dir = o.value("dir", c.output_dir);
  }
  if (c.kind == ProblemKind::Inventory && c.engine == mc::Engine::LqrClosedForm)
    throw ConfigError("config: the closed-form engine requires an LQR problem");
  for (int t : c.eval_stages)
    if (t < 1 || t > c.horizon) throw ConfigError("config: evaluation stage out of range");
  if (c.quad_nodes < 1 || c.grid_nodes < 2 || c.cov_nodes < 2) throw ConfigError("config: invalid node counts");
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

RunConfig preset(const std::string& name) {
  if (name == "lqr-benchmark") {
    return RunConfig{};  // the defaults are the benchmark figure configuration
  }
  if (name == "lqr-heavy-control") {
    RunConfig c;
    c.replications = 100;
    c.eval_states = {10.0};
    c.grid_lo = -16.0;
    c.grid_hi = 16.0;
    c.grid_nodes = 3201;
    c.control_lo = -16.0;
    c.control_hi = 16.0;
    return c;
  }
  if (name == "inventory-default") {
    return parse_config(R"({"problem": {"kind": "inventory"}})");
  }
  throw ConfigError("unknown preset '" + name + "'");
}

ProblemInstance build_problem(const RunConfig& config) {
  if (config.kind == ProblemKind::Inventory)
    // Inventory keeps its canonical per-stage reachable grids; the config
    // lo/hi only size the covariance lattice for this kind.
    return inventory::build_problem(config.inventory_params, config.grid_nodes);
  ProblemInstance p;
  p.horizon = config.horizon;
  p.initial_state = config.initial_state;
  StageModel st;
  st.kernel = LqrScalarStage{};
  st.u_lo = config.control_lo;
  st.u_hi = config.control_hi;
  st.convex = true;
  p.stages.assign(static_cast<std::size_t>(config.horizon), st);
  p.terminal_cost = [](double x) { return x * x; };
  p.grids.assign(static_cast<std::size_t>(config.horizon) + 1,
                 build_grid(config.grid_lo, config.grid_hi, config.grid_nodes));
  p.noise = NoiseSpec::iid_scalar(config.horizon, -config.noise_half_width, config.noise_half_width);
  return p;
}

void cmd_lqr_analytic(const RunConfig& config) {
  if (config.kind != ProblemKind::Lqr) throw ConfigError("lqr-analytic: requires an LQR problem");
  const auto model = lqr_model_of(config);
  const auto ric = lqr::riccati_backward(model);
  const auto law = lqr::asymptotic_recursion(model, ric);
  const int T = config.horizon;

  auto riccati_csv = open_output(config, "riccati.csv");
  riccati_csv << "t,P,K,M,q\n";
  for (int t = 1; t <= T; ++t)
    riccati_csv << t << ',' << ric.p(t)(0, 0) << ',' << ric.gain(t)(0, 0) << ',' << ric.closed_loop(t)(0, 0)
                << ',' << ric.offset(t) << '\n';
  riccati_csv << (T + 1) << ',' << ric.p(T + 1)(0, 0) << ",,," << ric.offset(T + 1) << '\n';

  auto law_csv = open_output(config, "asymlaw.csv");
  law_csv << "t,S,c,v\n";
  for (int t = 1; t <= T + 1; ++t)
    law_csv << t << ',' << law.s(t)(0, 0) << ',' << law.cross(t)(0) << ',' << law.offset(t) << '\n';

  auto curves = open_output(config, "variance_curves.csv");
  curves << "t,x,sigma2_asym,sigma2_prop,sigma2_curr\n";
  const std::vector<double> states = config.eval_states.empty() ? std::vector<double>{0.5, 1.5} : config.eval_states;
  for (double x : states)
    for (int t = 1; t <= T; ++t) {
      const auto xs = lqr::scalar_state(x);
      const auto d = lqr::variance_decomposition(law, ric, model, t, xs);
      curves << t << ',' << x << ',' << lqr::asym_variance_eval(law, t, xs) << ',' << d.propagated << ','
             << d.current << '\n';
    }
}

void cmd_simulate(const RunConfig& config) {
  mc::ReplicationConfig rc;
  rc.sample_size = config.sample_size;
  rc.replications = config.replications;
  rc.plan = SeedPlan{config.seed};
  rc.workers = config.workers;
  rc.engine = config.engine;
  for (int t : config.eval_stages)
    for (double x : config.eval_states) rc.eval_points.push_back({t, x});

  ProblemInstance problem;
  DpSolution true_sol;
  lqr::LqrModel model;
  lqr::RiccatiSolution ric;
  lqr::AsymptoticLaw law;
  std::vector<CovarianceGrid> gammas;
  if (config.engine == mc::Engine::GridDp) {
    problem = build_problem(config);
    true_sol = backward_induction(problem, DpMode::True, nullptr, config.quad_nodes);
    rc.problem = &problem;
    rc.true_solution = &true_sol;
    const auto quad = QuadratureRule::gauss_legendre(-1.0, 1.0, config.quad_nodes);
    gammas = propagate_covariance(problem, true_sol, quad,
                                  build_grid(config.grid_lo, config.grid_hi, config.cov_nodes));
  } else {
    model = lqr_model_of(config);
    ric = lqr::riccati_backward(model);
    law = lqr::asymptotic_recursion(model, ric);
    rc.lqr_model = &model;
    rc.riccati = &ric;
  }

  const auto errors = mc::run_replications(rc);
  const auto summary = mc::summarize(errors);

  auto errors_csv = open_output(config, "errors.csv");
  errors_csv << "replication,t,x,scaled_error\n";
  for (int r = 0; r < errors.replications; ++r)
    for (std::size_t c = 0; c < errors.eval_points.size(); ++c)
      errors_csv << r << ',' << errors.eval_points[c].stage << ',' << errors.eval_points[c].state << ','
                 << errors.at(r, static_cast<int>(c)) << '\n';

  auto summary_csv = open_output(config, "summary.csv");
  summary_csv << "t,x,mean,variance,var_ci_halfwidth,ks_stat,qq_corr\n";
  auto compare_csv = open_output(config, "compare.csv");
  compare_csv << "t,x,empirical_variance,analytic_variance,ratio\n";
  for (const auto& cell : summary.cells) {
    summary_csv << cell.point.stage << ',' << cell.point.state << ',' << cell.mean << ',' << cell.variance << ','
                << cell.var_ci_halfwidth << ',';
    if (cell.ks_stat)
      summary_csv << *cell.ks_stat;
    else
      summary_csv << "undefined";
    summary_csv << ',';
    if (cell.qq_corr)
      summary_csv << *cell.qq_corr;
    else
      summary_csv << "undefined";
    summary_csv << '\n';

    double analytic;
    if (config.engine == mc::Engine::GridDp) {
      const auto& g = gammas[static_cast<std::size_t>(cell.point.stage - 1)];
      analytic = g.eval(cell.point.state, cell.point.state);
    } else {
      analytic = lqr::asym_variance_eval(law, cell.point.stage, lqr::scalar_state(cell.point.state));
    }
    compare_csv << cell.point.stage << ',' << cell.point.state << ',' << cell.variance << ',' << analytic << ','
                << (analytic != 0.0 ? cell.variance / analytic : 0.0) << '\n';

    const std::string tag = "_t" + std::to_string(cell.point.stage) + "_x" + state_tag(cell.point.state);
    auto hist = open_output(config, "hist" + tag + ".csv");
    hist << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < cell.histogram.counts.size(); ++b)
      hist << cell.histogram.edges[b] << ',' << cell.histogram.edges[b + 1] << ',' << cell.histogram.counts[b]
           << '\n';
    auto qq = open_output(config, "qq" + tag + ".csv");
    qq << "theoretical,empirical\n";
    if (cell.variance > 0.0) {
      std::vector<double> sorted(static_cast<std::size_t>(errors.replications));
      for (int r = 0; r < errors.replications; ++r)
        sorted[static_cast<std::size_t>(r)] = errors.at(r, static_cast<int>(&cell - summary.cells.data()));
      std::sort(sorted.begin(), sorted.end());
      const double sd = std::sqrt(cell.variance);
      for (int i = 0; i < errors.replications; ++i)
        qq << cell.mean + sd * mc::normal_quantile((i + 0.5) / errors.replications) << ','
           << sorted[static_cast<std::size_t>(i)] << '\n';
    }
  }
}

void cmd_covariance(const RunConfig& config) {
  const ProblemInstance problem = build_problem(config);
  const DpSolution true_sol = backward_induction(problem, DpMode::True, nullptr, config.quad_nodes);
  const auto quad = QuadratureRule::gauss_legendre(-1.0, 1.0, config.quad_nodes);
  const StateGrid cov_grid = build_grid(config.grid_lo, config.grid_hi, config.cov_nodes);
  const auto gammas = propagate_covariance(problem, true_sol, quad, cov_grid);

  for (int t : config.eval_stages) {
    const auto& g = gammas[static_cast<std::size_t>(t - 1)];
    auto out = open_output(config, "gamma_t" + std::to_string(t) + ".csv");
    out << "node_i,node_j,value\n";
    for (int i = 0; i < cov_grid.n_nodes; ++i)
      for (int j = 0; j < cov_grid.n_nodes; ++j)
        out << cov_grid.node(i) << ',' << cov_grid.node(j) << ',' << g.at(i, j) << '\n';
  }

  auto decomp = open_output(config, "decomp.csv");
  decomp << "t,x,sigma2_curr,sigma2_prop,sigma2_asym\n";
  CovarianceGrid zero;
  zero.stage = config.horizon + 1;
  zero.grid = cov_grid;
  zero.gamma.assign(static_cast<std::size_t>(cov_grid.n_nodes) * static_cast<std::size_t>(cov_grid.n_nodes), 0.0);
  for (int t = 1; t <= config.horizon; ++t) {
    const CovarianceGrid& next = t == config.horizon ? zero : gammas[static_cast<std::size_t>(t)];
    for (double x : config.eval_states) {
      const auto split = variance_decompose(problem, true_sol, next, t, x, config.quad_nodes);
      decomp << t << ',' << x << ',' << split.current << ',' << split.propagated << ',' << split.asymptotic
             << '\n';
    }
  }
}

void cmd_optimal_value(const RunConfig& config) {
  const ProblemInstance problem = build_problem(config);
  const DpSolution true_sol = backward_induction(problem, DpMode::True, nullptr, config.quad_nodes);
  const auto estimate = optimal_value_variance(problem, true_sol, config.paths, SeedPlan{config.seed});

  double analytic;
  if (config.kind == ProblemKind::Lqr) {
    const auto model = lqr_model_of(config);
    const auto ric = lqr::riccati_backward(model);
    const auto law = lqr::asymptotic_recursion(model, ric);
    analytic = lqr::asym_variance_eval(law, 1, lqr::scalar_state(config.initial_state));
  } else {
    const auto quad = QuadratureRule::gauss_legendre(-1.0, 1.0, config.quad_nodes);
    const auto gammas = propagate_covariance(problem, true_sol, quad,
                                             build_grid(config.grid_lo, config.grid_hi, config.cov_nodes));
    analytic = gammas.front().eval(config.initial_state, config.initial_state);
  }

  auto out = open_output(config, "optval.csv");
  out << "paths,trajectory_variance,ci_halfwidth,analytic_gamma1\n";
  out << config.paths << ',' << estimate.variance << ',' << estimate.ci_halfwidth << ',' << analytic << '\n';
}

}  // namespace saadp::cli
