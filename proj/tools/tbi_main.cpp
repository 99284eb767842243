// Command-line front end: estimate, acquire, identify, pipeline, gen, export.
// Exit codes: 0 success, 2 configuration error, 3 data validation error,
// 4 phase failure.
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "tbi/errors.hpp"
#include "tbi/pipeline.hpp"
#include "tbi/synthetic.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitPhase = 4;

unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("TBI_THREADS")) {
    char* end = nullptr;
    long value = std::strtol(cap, &end, 10);
    if (end != cap && value >= 1) return std::min<unsigned>(hw, static_cast<unsigned>(value));
  }
  return hw;
}

struct StrategyFlags {
  std::string name = "bf";
  int k = 0;
  double epsilon = 0.0;
  double beta_fraction = 0.0;
  double alpha = 0.1;
  double delta = 0.05;
  double p_hat = 0.0;
  int partitions = 4;
  int max_iters = 20;
  bool beta_given = false;
  bool bound_given = false;

  void add_to(CLI::App* cmd) {
    auto saw_bound = [this](const std::string&) { bound_given = true; };
    cmd->add_option("--strategy", name, "bf|sg|dp|rank|brute");
    cmd->add_option("--k", k, "number of seed edges");
    cmd->add_option("--epsilon", epsilon, "seed fraction; K = ceil(epsilon * |E|)");
    cmd->add_option("--beta-fraction", beta_fraction, "SG sample count as a fraction of |E|")
        ->each([this](const std::string&) { beta_given = true; });
    cmd->add_option("--alpha", alpha, "SG error bound, used when beta is derived")
        ->each(saw_bound);
    cmd->add_option("--delta", delta, "SG confidence parameter")->each(saw_bound);
    cmd->add_option("--p-hat", p_hat, "SG overlap probability; defaults to K/|E|")
        ->each(saw_bound);
    cmd->add_option("--partitions", partitions, "partition count for dp");
    cmd->add_option("--max-iters", max_iters, "clustering iteration cap for dp");
  }

  tbi::StrategyConfig to_config() const {
    tbi::StrategyConfig config;
    config.name = name;
    config.k = k;
    config.epsilon = epsilon;
    // --beta-fraction wins; any of --alpha/--delta/--p-hat switches SG to the
    // Chernoff-derived sample size instead of the default 30% fraction.
    config.beta_fraction = beta_given ? beta_fraction : (bound_given ? 0.0 : 0.3);
    config.alpha = alpha;
    config.delta = delta;
    config.p_hat = p_hat;
    config.partitions = partitions;
    config.max_iters = max_iters;
    return config;
  }
};

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const tbi::PhaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhase;
  } catch (const tbi::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const tbi::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhase;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-driven traffic bottleneck identification"};
  app.require_subcommand(1);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate the spread model from trajectories");
  std::string est_network, est_trajectories, est_out;
  int est_hour = 8;
  double est_spread = 20.0, est_fallback = 1.0, est_speed = 10.0;
  bool est_strict = false;
  estimate->add_option("--network", est_network)->required();
  estimate->add_option("--trajectories", est_trajectories)->required();
  estimate->add_option("--hour", est_hour, "hour of day, 0-23")->required();
  estimate->add_option("--spread-window", est_spread, "spread window w in seconds");
  estimate->add_option("--fallback-residual", est_fallback, "residual for unobserved edges");
  estimate->add_option("--default-speed", est_speed, "fallback speed in m/s");
  estimate->add_flag("--strict-trajectories", est_strict, "fail on inconsistent trajectories");
  estimate->add_option("--out", est_out)->required();

  // acquire
  auto* acquire_cmd = app.add_subcommand("acquire", "compute the tau-consecutive influence index");
  std::string acq_network, acq_model, acq_trajectories, acq_volumes, acq_formula = "example",
              acq_out;
  double acq_start = 0.0, acq_monitor = 3600.0, acq_spread = 20.0, acq_theta = 1.0;
  int acq_tau = 3, acq_hops = tbi::kDefaultMaxHops;
  bool acq_require_source = false, acq_strict = false;
  acquire_cmd->add_option("--network", acq_network)->required();
  acquire_cmd->add_option("--model", acq_model)->required();
  auto* acq_traj_opt = acquire_cmd->add_option("--trajectories", acq_trajectories,
                                               "trajectories for the initial volumes");
  acquire_cmd->add_option("--volumes", acq_volumes, "precomputed initial volumes JSON")
      ->excludes(acq_traj_opt);
  acquire_cmd->add_option("--window-start", acq_start, "monitor window start, epoch seconds");
  acquire_cmd->add_option("--monitor-window", acq_monitor, "monitor window W in seconds");
  acquire_cmd->add_option("--spread-window", acq_spread, "spread window w in seconds");
  acquire_cmd->add_option("--theta", acq_theta, "congestion threshold, vehicles per meter");
  acquire_cmd->add_option("--tau", acq_tau, "consecutive-window requirement");
  acquire_cmd->add_option("--formula", acq_formula, "example|eq1");
  acquire_cmd->add_flag("--require-congested-source", acq_require_source,
                        "also require the influencing edge to be congested");
  acquire_cmd->add_option("--max-hops", acq_hops, "path enumeration depth cap");
  acquire_cmd->add_flag("--strict-trajectories", acq_strict);
  acquire_cmd->add_option("--out", acq_out)->required();

  // identify
  auto* identify = app.add_subcommand("identify", "select K seed edges from an influence index");
  std::string idf_influence, idf_out, idf_network, idf_trajectories;
  StrategyFlags idf_strategy;
  std::uint64_t idf_seed = 1;
  identify->add_option("--influence", idf_influence)->required();
  idf_strategy.add_to(identify);
  identify->add_option("--seed", idf_seed, "RNG seed for sg/dp");
  identify->add_option("--network", idf_network, "network CSV, for the coverage ratio");
  identify->add_option("--trajectories", idf_trajectories,
                       "trajectory CSV, for the coverage ratio");
  identify->add_option("--out", idf_out)->required();

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full two-phase pipeline");
  std::string pl_config, pl_network, pl_trajectories, pl_model, pl_out_dir, pl_formula,
      pl_strategy_name;
  std::optional<int> pl_hour, pl_tau, pl_hops;
  std::optional<double> pl_monitor, pl_spread, pl_theta, pl_start;
  std::optional<std::uint64_t> pl_seed;
  bool pl_strict = false, pl_require_source = false;
  pipeline_cmd->add_option("--config", pl_config, "pipeline config JSON");
  pipeline_cmd->add_option("--network", pl_network);
  pipeline_cmd->add_option("--trajectories", pl_trajectories);
  pipeline_cmd->add_option("--model", pl_model, "load this model instead of estimating");
  pipeline_cmd->add_option("--out-dir", pl_out_dir);
  pipeline_cmd
      ->add_option_function<int>("--hour", [&pl_hour](const int& v) { pl_hour = v; }, "hour of day");
  pipeline_cmd->add_option_function<double>(
      "--monitor-window", [&pl_monitor](const double& v) { pl_monitor = v; });
  pipeline_cmd->add_option_function<double>(
      "--spread-window", [&pl_spread](const double& v) { pl_spread = v; });
  pipeline_cmd->add_option_function<int>("--tau", [&pl_tau](const int& v) { pl_tau = v; });
  pipeline_cmd->add_option_function<double>("--theta",
                                            [&pl_theta](const double& v) { pl_theta = v; });
  pipeline_cmd->add_option_function<double>("--window-start",
                                            [&pl_start](const double& v) { pl_start = v; });
  std::optional<int> pl_k, pl_partitions, pl_max_iters;
  std::optional<double> pl_epsilon, pl_beta_fraction, pl_alpha, pl_delta, pl_p_hat;
  pipeline_cmd->add_option("--formula", pl_formula, "example|eq1");
  pipeline_cmd->add_option("--strategy", pl_strategy_name, "bf|sg|dp|rank|brute");
  pipeline_cmd->add_option_function<int>("--k", [&pl_k](const int& v) { pl_k = v; });
  pipeline_cmd->add_option_function<double>("--epsilon",
                                            [&pl_epsilon](const double& v) { pl_epsilon = v; });
  pipeline_cmd->add_option_function<double>(
      "--beta-fraction", [&pl_beta_fraction](const double& v) { pl_beta_fraction = v; });
  pipeline_cmd->add_option_function<double>("--alpha",
                                            [&pl_alpha](const double& v) { pl_alpha = v; });
  pipeline_cmd->add_option_function<double>("--delta",
                                            [&pl_delta](const double& v) { pl_delta = v; });
  pipeline_cmd->add_option_function<double>("--p-hat",
                                            [&pl_p_hat](const double& v) { pl_p_hat = v; });
  pipeline_cmd->add_option_function<int>(
      "--partitions", [&pl_partitions](const int& v) { pl_partitions = v; });
  pipeline_cmd->add_option_function<int>("--max-iters",
                                         [&pl_max_iters](const int& v) { pl_max_iters = v; });
  pipeline_cmd->add_option_function<std::uint64_t>(
      "--seed", [&pl_seed](const std::uint64_t& v) { pl_seed = v; });
  pipeline_cmd->add_flag("--strict-trajectories", pl_strict);
  pipeline_cmd->add_flag("--require-congested-source", pl_require_source);
  pipeline_cmd->add_option_function<int>("--max-hops", [&pl_hops](const int& v) { pl_hops = v; });

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic grid network and trajectories");
  tbi::SyntheticSpec gen_spec;
  std::string gen_network_out, gen_trajectories_out;
  gen->add_option("--rows", gen_spec.grid_rows);
  gen->add_option("--cols", gen_spec.grid_cols);
  gen->add_option("--trajectories", gen_spec.n_trajectories);
  gen->add_option("--hour", gen_spec.hour);
  gen->add_option("--seed", gen_spec.rng_seed);
  gen->add_option("--min-length", gen_spec.min_length_m);
  gen->add_option("--max-length", gen_spec.max_length_m);
  gen->add_option("--min-speed", gen_spec.min_speed_mps);
  gen->add_option("--max-speed", gen_spec.max_speed_mps);
  gen->add_option("--hotspots", gen_spec.n_hotspots);
  gen->add_option("--hotspot-probability", gen_spec.hotspot_probability);
  gen->add_option("--start-spread", gen_spec.start_spread_s);
  gen->add_option("--min-steps", gen_spec.min_steps);
  gen->add_option("--max-steps", gen_spec.max_steps);
  gen->add_option("--home-bias", gen_spec.home_bias);
  gen->add_option("--out-network", gen_network_out)->required();
  gen->add_option("--out-trajectories", gen_trajectories_out)->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "write seed and influenced edges as GeoJSON");
  std::string exp_seeds, exp_influence, exp_network, exp_out;
  export_cmd->add_option("--seeds", exp_seeds)->required();
  export_cmd->add_option("--influence", exp_influence)->required();
  export_cmd->add_option("--network", exp_network)->required();
  export_cmd->add_option("--out", exp_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (estimate->parsed()) {
    return run_guarded([&] {
      tbi::RoadNetwork network = tbi::load_network(est_network);
      tbi::TrajectoryLoad loaded = tbi::load_trajectories(est_trajectories, network, est_strict);
      if (loaded.dropped > 0) {
        std::cerr << "warning: dropped " << loaded.dropped << " inconsistent trajectories\n";
      }
      tbi::WindowConfig window;
      window.spread_window_s = est_spread;
      window.monitor_window_s = 3600.0;
      window.tau = 1;
      tbi::EstimationOptions options;
      options.fallback_residual = est_fallback;
      options.default_speed_mps = est_speed;
      tbi::SpreadModel model =
          tbi::estimate_model(loaded.trajectories, network, est_hour, window, options);
      tbi::save_model(model, network, est_out);
      std::cout << "model for hour " << est_hour << " written to " << est_out << "\n";
    });
  }

  if (acquire_cmd->parsed()) {
    return run_guarded([&] {
      tbi::RoadNetwork network = tbi::load_network(acq_network);
      tbi::SpreadModel model = tbi::load_model(acq_model, network);
      tbi::EdgeVolumes volumes;
      if (!acq_volumes.empty()) {
        volumes = tbi::load_volumes(acq_volumes, network);
      } else if (!acq_trajectories.empty()) {
        tbi::TrajectoryLoad loaded =
            tbi::load_trajectories(acq_trajectories, network, acq_strict);
        volumes = tbi::initial_volumes(loaded.trajectories, network, acq_start, model.speed_mps);
      } else {
        throw tbi::ValidationError("acquire needs --trajectories or --volumes");
      }
      tbi::WindowConfig window;
      window.monitor_window_s = acq_monitor;
      window.spread_window_s = acq_spread;
      window.tau = acq_tau;
      window.theta = acq_theta;
      window.window_start_s = acq_start;
      tbi::AcquireOptions options;
      options.max_hops = acq_hops;
      options.require_congested_source = acq_require_source;
      options.threads = worker_threads();
      tbi::WindowInfluence windows = tbi::acquire(network, model, volumes, window,
                                                  tbi::parse_formula(acq_formula), options);
      tbi::InfluenceIndex index = tbi::tau_filter(windows, acq_tau);
      tbi::save_index(index, acq_out);
      std::size_t influencing = 0;
      for (const auto& set : index.influenced) influencing += set.empty() ? 0 : 1;
      std::cout << "influence index over " << index.edge_count() << " edges (" << influencing
                << " influencing) written to " << acq_out << "\n";
    });
  }

  if (identify->parsed()) {
    return run_guarded([&] {
      tbi::InfluenceIndex index = tbi::load_index(idf_influence);
      tbi::SeedResult result = tbi::run_strategy(index, idf_strategy.to_config(), idf_seed);
      double coverage = 0.0;
      if (!idf_network.empty() && !idf_trajectories.empty()) {
        tbi::RoadNetwork network = tbi::load_network(idf_network);
        tbi::TrajectoryLoad loaded = tbi::load_trajectories(idf_trajectories, network);
        coverage = tbi::coverage_ratio(result, loaded.trajectories);
      }
      tbi::save_seed_result(result, index, coverage, idf_out);
      std::cout << result.strategy << " selected " << result.seeds.size()
                << " seeds, phi=" << result.phi << ", written to " << idf_out << "\n";
    });
  }

  if (pipeline_cmd->parsed()) {
    tbi::PipelineConfig config;
    try {
      if (!pl_config.empty()) config = tbi::load_pipeline_config(pl_config);
      if (!pl_network.empty()) config.network_path = pl_network;
      if (!pl_trajectories.empty()) config.trajectories_path = pl_trajectories;
      if (!pl_model.empty()) config.model_path = pl_model;
      if (!pl_out_dir.empty()) config.out_dir = pl_out_dir;
      if (pl_hour) config.hour = *pl_hour;
      if (pl_monitor) config.window.monitor_window_s = *pl_monitor;
      if (pl_spread) config.window.spread_window_s = *pl_spread;
      if (pl_tau) config.window.tau = *pl_tau;
      if (pl_theta) config.window.theta = *pl_theta;
      if (pl_start) config.window.window_start_s = *pl_start;
      if (!pl_formula.empty()) config.formula = tbi::parse_formula(pl_formula);
      if (!pl_strategy_name.empty()) config.strategy.name = pl_strategy_name;
      if (pl_k) config.strategy.k = *pl_k;
      if (pl_epsilon) config.strategy.epsilon = *pl_epsilon;
      if (pl_beta_fraction) config.strategy.beta_fraction = *pl_beta_fraction;
      if (pl_alpha) config.strategy.alpha = *pl_alpha;
      if (pl_delta) config.strategy.delta = *pl_delta;
      if (pl_p_hat) config.strategy.p_hat = *pl_p_hat;
      if (pl_partitions) config.strategy.partitions = *pl_partitions;
      if (pl_max_iters) config.strategy.max_iters = *pl_max_iters;
      if (pl_seed) config.rng_seed = *pl_seed;
      if (pl_strict) config.strict_trajectories = true;
      if (pl_require_source) config.require_congested_source = true;
      if (pl_hops) config.max_hops = *pl_hops;
      config.threads = worker_threads();
      if (config.network_path.empty() || config.trajectories_path.empty()) {
        throw tbi::ValidationError("pipeline needs --config or --network and --trajectories");
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    return run_guarded([&] {
      tbi::RunReport report = tbi::run_pipeline(config);
      std::cout << "strategy " << report.seed_result.strategy << ": phi=" << report.seed_result.phi
                << " coverage_ratio=" << report.coverage_ratio << "\nseeds:";
      for (const auto& id : report.seed_ids) std::cout << ' ' << id;
      std::cout << "\nartifacts in " << config.out_dir.string() << "\n";
    });
  }

  if (gen->parsed()) {
    return run_guarded([&] {
      tbi::SyntheticData data = tbi::generate_synthetic(gen_spec);
      tbi::write_synthetic(data, gen_network_out, gen_trajectories_out);
      std::cout << "generated " << data.network.vertex_count() << " vertices, "
                << data.network.edge_count() << " edges, " << data.trajectories.size()
                << " trajectories\n";
    });
  }

  if (export_cmd->parsed()) {
    return run_guarded([&] {
      tbi::RoadNetwork network = tbi::load_network(exp_network);
      tbi::InfluenceIndex index = tbi::load_index(exp_influence);
      tbi::SeedResult result = tbi::load_seed_result(exp_seeds, index);
      tbi::export_geojson(result, index, network, exp_out);
      std::cout << "geojson written to " << exp_out << "\n";
    });
  }

  return 0;
}
