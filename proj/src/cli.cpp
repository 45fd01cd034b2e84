#include "infoplan/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "infoplan/bounds.hpp"
#include "infoplan/common.hpp"
#include "infoplan/config.hpp"
#include "infoplan/gas.hpp"
#include "infoplan/instances.hpp"
#include "infoplan/report.hpp"
#include "infoplan/search.hpp"
#include "infoplan/tracking.hpp"

namespace infoplan {
namespace {

namespace fs = std::filesystem;

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SearchOptions search_options(const ExperimentConfig& config) {
  SearchOptions options;
  options.node_cap = config.node_cap;
  options.workers = config.workers;
  return options;
}

// Planner labels name output files and CSV rows: the kind alone when unique,
// kind_<index> when the same kind appears more than once.
std::vector<std::string> planner_labels(const std::vector<PlannerSpec>& planners) {
  std::map<std::string, int> count;
  for (const PlannerSpec& p : planners) ++count[p.kind];
  std::vector<std::string> labels;
  for (size_t i = 0; i < planners.size(); ++i) {
    const PlannerSpec& p = planners[i];
    labels.push_back(count[p.kind] > 1 ? p.kind + "_" + std::to_string(i) : p.kind);
  }
  return labels;
}

PlannerReport base_report(const PlannerSpec& spec, const std::string& label) {
  PlannerReport report;
  report.label = label;
  report.kind = spec.kind;
  report.horizon = spec.horizon;
  report.epsilon = spec.epsilon;
  report.delta = spec.delta;
  return report;
}

std::string trajectory_path(const ExperimentConfig& config, const std::string& label) {
  return (fs::path(config.out_dir) / ("trajectory_" + label + ".csv")).string();
}

// Shared by the gas and random-instance scenarios: per-step cost is the log
// det of the covariance reached by time t, so the last row equals the
// planner's final cost.
std::vector<TrajectoryPoint> plan_trajectory(const PlanResult& plan) {
  std::vector<TrajectoryPoint> rows;
  for (size_t t = 0; t < plan.states.size(); ++t) {
    TrajectoryPoint row;
    row.t = static_cast<int>(t);
    const VectorXd& c = plan.states[t].coords();
    row.coords.assign(c.data(), c.data() + c.size());
    row.cost_to_date = logdet(plan.covs[t]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void append_tree_sizes(std::vector<TreeSizeRow>& rows, const std::string& label,
                       const std::vector<std::int64_t>& sizes) {
  for (size_t t = 0; t < sizes.size(); ++t)
    rows.push_back({static_cast<int>(t), label, sizes[t]});
}

GasPlanner gas_planner_kind(const std::string& kind) {
  if (kind == "fvi") return GasPlanner::Fvi;
  if (kind == "greedy") return GasPlanner::Greedy;
  return GasPlanner::Rvi;
}

TrackingPlanner tracking_planner_kind(const std::string& kind) {
  return kind == "greedy" ? TrackingPlanner::Greedy : TrackingPlanner::Rvi;
}

TrackingWorld tracking_world(const ExperimentConfig& config) {
  const TrackingConfig& t = config.tracking;
  TrackingWorld world =
      make_tracking_world(t.tree_seed, t.tree_count, t.tree_radius, t.tree_separation);
  world.tau = t.tau;
  world.q = t.q;
  world.max_range = t.max_range;
  world.a0 = t.a0;
  world.a1 = t.a1;
  world.a2 = t.a2;
  world.b0 = t.b0;
  world.b1 = t.b1;
  world.xmin = t.xmin;
  world.xmax = t.xmax;
  world.ymin = t.ymin;
  world.ymax = t.ymax;
  world.sensor_start = {t.sensor_start[0], t.sensor_start[1], t.sensor_start[2]};
  world.target_start_mean =
      TargetState(t.target_mean[0], t.target_mean[1], t.target_mean[2], t.target_mean[3]);
  Eigen::Vector4d diag(t.prior_diag[0], t.prior_diag[1], t.prior_diag[2], t.prior_diag[3]);
  world.prior = Covariance::assume_psd(diag.asDiagonal());
  return world;
}

TrackingPlannerConfig tracking_planner_config(const ExperimentConfig& config,
                                              const PlannerSpec& spec) {
  TrackingPlannerConfig pc;
  pc.kind = tracking_planner_kind(spec.kind);
  pc.horizon = spec.horizon;
  pc.epsilon = spec.epsilon;
  pc.delta = spec.delta;
  pc.options = search_options(config);
  return pc;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

void plan_gas(const ExperimentConfig& config, std::vector<PlannerReport>& reports,
              std::vector<TreeSizeRow>& tree_rows) {
  const GasConfig& g = config.gas;
  const GasGrid grid = GasGrid::make(g.width, g.height, g.cell_size, g.prior_var, g.prior_mean,
                                     g.noise_var, g.beam_max_range);
  const auto labels = planner_labels(config.planners);
  for (size_t i = 0; i < config.planners.size(); ++i) {
    const PlannerSpec& spec = config.planners[i];
    const GasExperiment experiment = run_gas_experiment(
        grid, spec.horizon, gas_planner_kind(spec.kind), config.seed, search_options(config));
    write_trajectory_csv(trajectory_path(config, labels[i]), {"ix", "iy", "beam_angle"},
                         plan_trajectory(experiment.plan));
    append_tree_sizes(tree_rows, labels[i], experiment.plan.tree_sizes);

    PlannerReport report = base_report(spec, labels[i]);
    report.final_cost = experiment.plan.final_cost;
    report.wall_time = experiment.plan.wall_time;
    report.tree_sizes = experiment.plan.tree_sizes;
    if (spec.kind == "rvi") report.bound_note = "bound inapplicable (W singular)";
    reports.push_back(std::move(report));
  }
}

void plan_random(const ExperimentConfig& config, std::vector<PlannerReport>& reports,
                 std::vector<TreeSizeRow>& tree_rows) {
  RandomInstanceParams params;
  params.n_y = config.random.target_dim;
  params.num_controls = config.random.controls;
  params.lattice_step = config.random.lattice_step;
  params.w_ridge = config.random.w_ridge;
  params.seed = config.seed;
  for (const PlannerSpec& spec : config.planners)
    params.T = std::max(params.T, spec.horizon);
  const LinearScenario scenario = make_random_instance(params);
  const SearchOptions options = search_options(config);
  const auto labels = planner_labels(config.planners);

  std::vector<PlanResult> plans;
  for (size_t i = 0; i < config.planners.size(); ++i) {
    const PlannerSpec& spec = config.planners[i];
    PlanResult plan;
    if (spec.kind == "fvi") plan = fvi(scenario, spec.horizon, options);
    else if (spec.kind == "greedy") plan = greedy(scenario, spec.horizon, options);
    else plan = rvi(scenario, spec.horizon, spec.epsilon, spec.delta, options);
    write_trajectory_csv(trajectory_path(config, labels[i]), {"pos"}, plan_trajectory(plan));
    append_tree_sizes(tree_rows, labels[i], plan.tree_sizes);

    PlannerReport report = base_report(spec, labels[i]);
    report.final_cost = plan.final_cost;
    report.wall_time = plan.wall_time;
    report.tree_sizes = plan.tree_sizes;
    reports.push_back(std::move(report));
    plans.push_back(std::move(plan));
  }

  // With an exhaustive reference at the same horizon, every reduced plan
  // gets its measured gap and certified ceiling attached.
  for (size_t i = 0; i < config.planners.size(); ++i) {
    const PlannerSpec& spec = config.planners[i];
    if (spec.kind != "rvi") continue;
    const PlanResult* reference = nullptr;
    for (size_t j = 0; j < config.planners.size(); ++j)
      if (config.planners[j].kind == "fvi" && config.planners[j].horizon == spec.horizon)
        reference = &plans[j];
    if (reference == nullptr) continue;

    BoundInputs inputs;
    inputs.beta_star = peak_error(
        std::vector<Covariance>(reference->covs.begin() + 1, reference->covs.end()));
    inputs.lambda_w_min = scenario.target.w_min_eig;
    inputs.n_y = static_cast<int>(scenario.target.dim());
    inputs.T = spec.horizon;
    inputs.epsilon = spec.epsilon + options.redundancy_tol;
    inputs.delta = spec.delta;
    inputs.logdet_W = logdet(scenario.target.W);
    PlannerReport& report = reports[i];
    if (spec.delta > 0.0) {
      const LipschitzEstimate est = estimate_lipschitz(scenario, 64, config.seed);
      inputs.L_f = est.L_f;
      inputs.L_m = est.L_m;
      report.lipschitz_estimated = est.lower_bound_only;
    }
    report.has_bound = true;
    report.beta_star = inputs.beta_star;
    report.eta_star = eta_star(inputs.beta_star, inputs.lambda_w_min);
    report.delta_t = delta_T_eps(inputs);
    report.zeta_t = zeta(inputs.L_f, inputs.L_m, inputs.delta, inputs.T);
    report.l_f = inputs.L_f;
    report.l_m = inputs.L_m;
    report.bound = bound_eps_delta(inputs, reference->final_cost);
    report.gap = reports[i].final_cost - reference->final_cost;
  }
}

void plan_tracking(const ExperimentConfig& config, std::vector<PlannerReport>& reports) {
  const TrackingWorld world = tracking_world(config);
  const auto labels = planner_labels(config.planners);
  for (size_t i = 0; i < config.planners.size(); ++i) {
    const PlannerSpec& spec = config.planners[i];
    const TrackResult result =
        mpc_run(world, tracking_planner_config(config, spec), config.tracking.t_max, config.seed);

    std::vector<TrajectoryPoint> rows;
    rows.push_back({0,
                    {world.sensor_start.x, world.sensor_start.y, world.sensor_start.theta},
                    logdet(world.prior)});
    for (size_t t = 0; t < result.steps.size(); ++t) {
      const TrackStep& step = result.steps[t];
      rows.push_back({static_cast<int>(t) + 1,
                      {step.sensor.x, step.sensor.y, step.sensor.theta},
                      result.logdet_cov[t]});
    }
    write_trajectory_csv(trajectory_path(config, labels[i]), {"x", "y", "theta"}, rows);

    PlannerReport report = base_report(spec, labels[i]);
    report.episode = true;
    report.lost = result.lost;
    report.final_logdet = result.logdet_cov.back();
    report.mean_pos_error = mean_of(result.pos_error);
    report.mean_vel_error = mean_of(result.vel_error);
    reports.push_back(std::move(report));
  }
}

int cmd_plan(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.out_dir);

  std::vector<PlannerReport> reports;
  std::vector<TreeSizeRow> tree_rows;
  if (config.scenario == "gas") plan_gas(config, reports, tree_rows);
  else if (config.scenario == "random") plan_random(config, reports, tree_rows);
  else plan_tracking(config, reports);

  // Closed-loop episodes replan every step and keep no per-level tree
  // counts, so the tracking scenario leaves this file empty.
  write_tree_sizes_csv((fs::path(config.out_dir) / "tree_sizes.csv").string(), tree_rows);
  write_report_json((fs::path(config.out_dir) / "report.json").string(), "plan", config,
                    elapsed_since(start), reports, {}, {});
  return 0;
}

int cmd_verify(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.out_dir);
  const SearchOptions options = search_options(config);
  const VerifyConfig& vf = config.verify;

  std::mt19937_64 seeder(config.seed);
  std::vector<BoundRow> rows;
  for (int i = 0; i < vf.instances; ++i) {
    RandomInstanceParams params;
    params.n_y = 2 + (i % 2);
    params.num_controls = 2 + ((i / 2) % 2);
    params.T = 3 + ((i / 4) % 3);
    params.seed = seeder();

    for (double delta : vf.deltas) {
      LinearScenario scenario;
      double l_f = 0.0, l_m = 0.0;
      std::string family;
      if (delta == 0.0) {
        scenario = make_random_instance(params);
        family = "site";
      } else {
        // The smooth family's continuity constants are exact, so its bound
        // is a certificate rather than a sampled estimate.
        ContinuityInstance inst = make_continuity_instance(params, vf.slope);
        scenario = std::move(inst.scenario);
        l_f = inst.L_f;
        l_m = inst.L_m;
        family = "smooth";
      }

      for (double eps : vf.epsilons) {
        const GapReport gap = measure_gap(scenario, params.T, eps, delta, l_f, l_m, options);
        BoundRow row;
        row.instance = i;
        row.family = family;
        row.epsilon = eps;
        row.delta = delta;
        row.v_fvi = gap.v_exact;
        row.v_rvi = gap.v_reduced;
        row.gap = gap.gap;
        row.bound = gap.bound;
        row.ok = gap.ok;
        row.beta_star = gap.beta_star;
        BoundInputs inputs;
        inputs.beta_star = gap.beta_star;
        inputs.lambda_w_min = scenario.target.w_min_eig;
        inputs.n_y = params.n_y;
        inputs.T = params.T;
        inputs.epsilon = eps + options.redundancy_tol;
        inputs.delta = delta;
        inputs.L_f = l_f;
        inputs.L_m = l_m;
        inputs.logdet_W = logdet(scenario.target.W);
        row.eta_star = eta_star(inputs.beta_star, inputs.lambda_w_min);
        row.delta_t = delta_T_eps(inputs);
        row.zeta_t = zeta(l_f, l_m, delta, params.T);
        row.l_f = l_f;
        row.l_m = l_m;
        rows.push_back(std::move(row));
      }
    }
  }

  write_bounds_csv((fs::path(config.out_dir) / "bounds.csv").string(), rows);
  write_report_json((fs::path(config.out_dir) / "report.json").string(), "verify", config,
                    elapsed_since(start), {}, rows, {});

  int violations = 0;
  for (const BoundRow& row : rows)
    if (!row.ok) ++violations;
  if (violations > 0) {
    std::cerr << "bound violation in " << violations << " of " << rows.size()
              << " cases (see bounds.csv)\n";
    return 3;
  }
  return 0;
}

int cmd_montecarlo(const ExperimentConfig& config) {
  if (config.scenario != "tracking")
    throw ConfigError("scenario: montecarlo requires the tracking scenario");
  if (config.tracking.runs < 1)
    throw ConfigError("tracking.runs: must be at least 1 for montecarlo");

  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.out_dir);

  const TrackingWorld world = tracking_world(config);
  std::vector<TrackingPlannerConfig> planner_configs;
  for (const PlannerSpec& spec : config.planners)
    planner_configs.push_back(tracking_planner_config(config, spec));

  const std::vector<TrackingSummary> summaries = monte_carlo(
      world, planner_configs, config.tracking.t_max, config.tracking.runs, config.seed,
      config.workers);

  const auto labels = planner_labels(config.planners);
  std::vector<MonteCarloRow> rows;
  std::vector<McConfigReport> mc_reports;
  for (size_t i = 0; i < summaries.size(); ++i) {
    const TrackingSummary& s = summaries[i];
    for (size_t t = 0; t < s.mean_logdet.size(); ++t)
      rows.push_back({labels[i], static_cast<int>(t) + 1, s.mean_logdet[t]});

    McConfigReport mc;
    mc.label = labels[i];
    mc.kind = config.planners[i].kind;
    mc.horizon = config.planners[i].horizon;
    mc.epsilon = config.planners[i].epsilon;
    mc.delta = config.planners[i].delta;
    mc.mean_pos_rmse = s.mean_pos_rmse;
    mc.mean_vel_rmse = s.mean_vel_rmse;
    mc.mean_final_logdet = s.mean_final_logdet;
    mc.lost_fraction = s.lost_fraction;
    mc_reports.push_back(std::move(mc));
  }

  write_montecarlo_csv((fs::path(config.out_dir) / "montecarlo.csv").string(), rows);
  write_report_json((fs::path(config.out_dir) / "report.json").string(), "montecarlo", config,
                    elapsed_since(start), {}, {}, mc_reports);
  return 0;
}

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  std::int64_t node_cap = 0;
};

struct CommonOpts {
  CLI::Option* config = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* node_cap = nullptr;
};

CommonOpts add_common(CLI::App* sub, CliOverrides& overrides) {
  CommonOpts opts;
  opts.config = sub->add_option("--config", overrides.config_path,
                                "configuration file, dotted-key text or JSON");
  opts.out = sub->add_option("--out", overrides.out_dir, "output directory (overrides config)");
  opts.seed = sub->add_option("--seed", overrides.seed, "master seed (overrides config)");
  opts.workers =
      sub->add_option("--workers", overrides.workers, "worker threads (overrides config)");
  opts.node_cap =
      sub->add_option("--node-cap", overrides.node_cap, "planner node budget (overrides config)");
  return opts;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"informative trajectory planning for sensing robots"};
  app.require_subcommand(1);

  CliOverrides overrides;
  CLI::App* plan = app.add_subcommand("plan", "run the configured planners and write trajectories");
  CLI::App* verify =
      app.add_subcommand("verify", "check measured pruning gaps against certified bounds");
  CLI::App* montecarlo =
      app.add_subcommand("montecarlo", "paired closed-loop tracking episodes with statistics");
  CLI::App* defaults =
      app.add_subcommand("print-defaults", "print the default configuration with comments");
  const std::vector<CommonOpts> opts = {add_common(plan, overrides), add_common(verify, overrides),
                                        add_common(montecarlo, overrides)};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto given = [&](CLI::Option* CommonOpts::* member) {
    for (const CommonOpts& o : opts)
      if ((o.*member)->count() > 0) return true;
    return false;
  };

  try {
    if (defaults->parsed()) {
      std::cout << print_defaults();
      return 0;
    }

    ExperimentConfig config = given(&CommonOpts::config) ? load_config_file(overrides.config_path)
                                                         : default_experiment_config();
    if (given(&CommonOpts::out)) config.out_dir = overrides.out_dir;
    if (given(&CommonOpts::seed)) config.seed = overrides.seed;
    if (given(&CommonOpts::workers)) config.workers = overrides.workers;
    if (given(&CommonOpts::node_cap)) config.node_cap = overrides.node_cap;
    validate_config(config);

    if (plan->parsed()) return cmd_plan(config);
    if (verify->parsed()) return cmd_verify(config);
    return cmd_montecarlo(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const PlannerAbort& e) {
    std::cerr << "planner abort: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace infoplan
