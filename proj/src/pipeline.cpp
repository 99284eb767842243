#include "tbi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <type_traits>

#include "tbi/errors.hpp"

namespace tbi {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + " " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path,
                     const char* what) {
  std::ofstream out(path);
  if (!out) throw ParseError(std::string("cannot write ") + what + " " + path.string());
  out << j.dump(2) << "\n";
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

int StrategyConfig::resolve_k(std::size_t edge_count) const {
  if (k > 0) return k;
  if (epsilon > 0.0) {
    auto value = static_cast<int>(std::ceil(epsilon * static_cast<double>(edge_count)));
    return std::max(value, 1);
  }
  throw ValidationError("strategy needs k or epsilon");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  nlohmann::json j = read_json_file(path, "config file");
  PipelineConfig config;
  try {
    reject_unknown_keys(j, {"schema", "network", "trajectories", "model", "out_dir", "hour",
                            "window", "formula", "strategy", "rng_seed", "fallback_residual",
                            "default_speed_mps", "max_hops", "require_congested_source",
                            "strict_trajectories", "threads"},
                        "config");
    if (j.at("schema").get<int>() != kArtifactSchema) {
      throw ValidationError("unsupported config schema");
    }
    config.network_path = j.at("network").get<std::string>();
    config.trajectories_path = j.at("trajectories").get<std::string>();
    if (j.contains("model") && !j["model"].is_null()) {
      config.model_path = std::filesystem::path(j["model"].get<std::string>());
    }
    if (j.contains("out_dir")) config.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("hour")) config.hour = j["hour"].get<int>();
    if (j.contains("window")) {
      const auto& w = j["window"];
      reject_unknown_keys(w, {"monitor_s", "spread_s", "tau", "theta", "start_s"}, "config.window");
      if (w.contains("monitor_s")) config.window.monitor_window_s = w["monitor_s"].get<double>();
      if (w.contains("spread_s")) config.window.spread_window_s = w["spread_s"].get<double>();
      if (w.contains("tau")) config.window.tau = w["tau"].get<int>();
      if (w.contains("theta")) config.window.theta = w["theta"].get<double>();
      if (w.contains("start_s")) config.window.window_start_s = w["start_s"].get<double>();
    }
    if (j.contains("formula")) config.formula = parse_formula(j["formula"].get<std::string>());
    if (j.contains("strategy")) {
      const auto& s = j["strategy"];
      reject_unknown_keys(s, {"name", "k", "epsilon", "beta_fraction", "alpha", "delta", "p_hat",
                              "partitions", "max_iters"},
                          "config.strategy");
      if (s.contains("name")) config.strategy.name = s["name"].get<std::string>();
      if (s.contains("k")) config.strategy.k = s["k"].get<int>();
      if (s.contains("epsilon")) config.strategy.epsilon = s["epsilon"].get<double>();
      if (s.contains("beta_fraction")) config.strategy.beta_fraction = s["beta_fraction"].get<double>();
      if (s.contains("alpha")) config.strategy.alpha = s["alpha"].get<double>();
      if (s.contains("delta")) config.strategy.delta = s["delta"].get<double>();
      if (s.contains("p_hat")) config.strategy.p_hat = s["p_hat"].get<double>();
      if (s.contains("partitions")) config.strategy.partitions = s["partitions"].get<int>();
      if (s.contains("max_iters")) config.strategy.max_iters = s["max_iters"].get<int>();
    }
    if (j.contains("rng_seed")) config.rng_seed = j["rng_seed"].get<std::uint64_t>();
    if (j.contains("fallback_residual")) {
      config.estimation.fallback_residual = j["fallback_residual"].get<double>();
    }
    if (j.contains("default_speed_mps")) {
      config.estimation.default_speed_mps = j["default_speed_mps"].get<double>();
    }
    if (j.contains("max_hops")) config.max_hops = j["max_hops"].get<int>();
    if (j.contains("require_congested_source")) {
      config.require_congested_source = j["require_congested_source"].get<bool>();
    }
    if (j.contains("strict_trajectories")) {
      config.strict_trajectories = j["strict_trajectories"].get<bool>();
    }
    if (j.contains("threads")) config.threads = j["threads"].get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config file " + path.string() + ": " + e.what());
  }
  return config;
}

nlohmann::json pipeline_config_json(const PipelineConfig& config) {
  nlohmann::json j;
  j["schema"] = kArtifactSchema;
  j["network"] = config.network_path.string();
  j["trajectories"] = config.trajectories_path.string();
  j["model"] = config.model_path ? nlohmann::json(config.model_path->string()) : nlohmann::json();
  j["out_dir"] = config.out_dir.string();
  j["hour"] = config.hour;
  j["window"] = {{"monitor_s", config.window.monitor_window_s},
                 {"spread_s", config.window.spread_window_s},
                 {"tau", config.window.tau},
                 {"theta", config.window.theta},
                 {"start_s", config.window.window_start_s}};
  j["formula"] = std::string(formula_label(config.formula));
  j["strategy"] = {{"name", config.strategy.name},
                   {"k", config.strategy.k},
                   {"epsilon", config.strategy.epsilon},
                   {"beta_fraction", config.strategy.beta_fraction},
                   {"alpha", config.strategy.alpha},
                   {"delta", config.strategy.delta},
                   {"p_hat", config.strategy.p_hat},
                   {"partitions", config.strategy.partitions},
                   {"max_iters", config.strategy.max_iters}};
  j["rng_seed"] = config.rng_seed;
  j["fallback_residual"] = config.estimation.fallback_residual;
  j["default_speed_mps"] = config.estimation.default_speed_mps;
  j["max_hops"] = config.max_hops;
  j["require_congested_source"] = config.require_congested_source;
  j["strict_trajectories"] = config.strict_trajectories;
  j["threads"] = config.threads;
  return j;
}

double coverage_ratio(const SeedResult& result, std::span<const Trajectory> trajectories) {
  std::size_t covered = edges_covered(trajectories).size();
  if (covered == 0) return 0.0;
  return static_cast<double>(result.phi) / static_cast<double>(covered);
}

SeedResult run_strategy(const InfluenceIndex& index, const StrategyConfig& strategy,
                        std::uint64_t rng_seed) {
  int k = strategy.resolve_k(index.edge_count());
  if (strategy.name == "bf") return select_bf(index, k);
  if (strategy.name == "rank") return rank_baseline(index, k);
  if (strategy.name == "brute") return select_bruteforce(index, k);
  if (strategy.name == "sg") {
    SamplingParams params;
    params.alpha = strategy.alpha;
    params.delta = strategy.delta;
    if (strategy.beta_fraction > 0.0) {
      params.beta = static_cast<std::size_t>(std::max<long long>(
          1, std::llround(strategy.beta_fraction * static_cast<double>(index.edge_count()))));
      params.p_hat = 0.0;
    } else {
      params.p_hat = strategy.p_hat > 0.0
                         ? strategy.p_hat
                         : static_cast<double>(k) / static_cast<double>(index.edge_count());
      params.beta = static_cast<std::size_t>(sampling_size(params.alpha, params.delta, params.p_hat));
    }
    return select_sg(index, k, params, rng_seed);
  }
  if (strategy.name == "dp") {
    return select_partition_dp(index, k, strategy.partitions, strategy.max_iters, rng_seed);
  }
  throw ValidationError("unknown strategy '" + strategy.name + "'");
}

nlohmann::json seed_result_json(const SeedResult& result, const InfluenceIndex& index,
                                double coverage) {
  nlohmann::json j;
  j["strategy"] = result.strategy;
  auto& seeds = j["seeds"] = nlohmann::json::array();
  for (EdgeIndex seed : result.seeds) {
    seeds.push_back(index.edge_ids[static_cast<std::size_t>(seed)]);
  }
  j["marginal_gains"] = result.marginal_gains;
  j["phi"] = result.phi;
  j["coverage_ratio"] = coverage;
  j["rng_seed"] = result.rng_seed ? nlohmann::json(*result.rng_seed) : nlohmann::json();
  return j;
}

void save_seed_result(const SeedResult& result, const InfluenceIndex& index, double coverage,
                      const std::filesystem::path& path) {
  write_json_file(seed_result_json(result, index, coverage), path, "seed file");
}

SeedResult load_seed_result(const std::filesystem::path& path, const InfluenceIndex& index,
                            double* coverage) {
  nlohmann::json j = read_json_file(path, "seed file");
  SeedResult result;
  try {
    result.strategy = j.at("strategy").get<std::string>();
    for (const auto& id : j.at("seeds")) {
      const std::string name = id.get<std::string>();
      auto it = std::find(index.edge_ids.begin(), index.edge_ids.end(), name);
      if (it == index.edge_ids.end()) {
        throw ValidationError("seed file references unknown edge '" + name + "'");
      }
      result.seeds.push_back(static_cast<EdgeIndex>(it - index.edge_ids.begin()));
    }
    result.marginal_gains = j.at("marginal_gains").get<std::vector<int>>();
    result.phi = j.at("phi").get<int>();
    if (!j.at("rng_seed").is_null()) result.rng_seed = j["rng_seed"].get<std::uint64_t>();
    if (coverage != nullptr) *coverage = j.at("coverage_ratio").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("seed file " + path.string() + ": " + e.what());
  }
  return result;
}

void export_geojson(const SeedResult& result, const InfluenceIndex& index,
                    const RoadNetwork& network, const std::filesystem::path& path) {
  if (!network.has_full_coordinates()) {
    throw ValidationError("geojson export needs vertex coordinates on every edge");
  }
  auto line_feature = [&](EdgeIndex index_edge, nlohmann::json properties) {
    const std::string& id = index.edge_ids[static_cast<std::size_t>(index_edge)];
    const EdgeRecord& rec = network.edge(network.require_edge(id));
    const LatLon from = *network.vertex_coord(rec.from);
    const LatLon to = *network.vertex_coord(rec.to);
    properties["edge"] = id;
    nlohmann::json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", "LineString"},
                           // RFC 7946: positions are [longitude, latitude]
                           {"coordinates", {{from.lon, from.lat}, {to.lon, to.lat}}}};
    feature["properties"] = std::move(properties);
    return feature;
  };

  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    features.push_back(line_feature(result.seeds[i], {{"role", "seed"},
                                                      {"rank", i + 1},
                                                      {"marginal_gain", result.marginal_gains[i]}}));
  }
  // Influenced edges in index order, each annotated with the seeds that
  // reach it (in seed rank order).
  std::vector<char> influenced(index.edge_count(), 0);
  for (EdgeIndex seed : result.seeds) {
    for (EdgeIndex target : index.influenced[static_cast<std::size_t>(seed)]) {
      influenced[static_cast<std::size_t>(target)] = 1;
    }
  }
  for (std::size_t e = 0; e < index.edge_count(); ++e) {
    if (!influenced[e]) continue;
    nlohmann::json sources = nlohmann::json::array();
    for (EdgeIndex seed : result.seeds) {
      const auto& set = index.influenced[static_cast<std::size_t>(seed)];
      if (std::binary_search(set.begin(), set.end(), static_cast<EdgeIndex>(e))) {
        sources.push_back(index.edge_ids[static_cast<std::size_t>(seed)]);
      }
    }
    features.push_back(
        line_feature(static_cast<EdgeIndex>(e), {{"role", "influenced"}, {"sources", sources}}));
  }
  nlohmann::json collection;
  collection["type"] = "FeatureCollection";
  collection["features"] = std::move(features);
  write_json_file(collection, path, "geojson file");
}

RunReport run_pipeline(const PipelineConfig& config) {
  using Clock = std::chrono::steady_clock;
  RunReport report;
  report.config_echo = pipeline_config_json(config);

  auto timed = [&report](const char* phase, auto&& body) -> decltype(body()) {
    auto start = Clock::now();
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        report.timings.push_back(
            {phase, std::chrono::duration<double, std::milli>(Clock::now() - start).count()});
        return;
      } else {
        auto value = body();
        report.timings.push_back(
            {phase, std::chrono::duration<double, std::milli>(Clock::now() - start).count()});
        return value;
      }
    } catch (const PhaseError&) {
      throw;
    } catch (const std::exception& e) {
      throw PhaseError(phase, e.what());
    }
  };

  std::filesystem::create_directories(config.out_dir);

  struct Loaded {
    RoadNetwork network;
    TrajectoryLoad trajectories;
  };
  Loaded loaded = timed("load", [&] {
    Loaded l{load_network(config.network_path), {}};
    l.trajectories =
        load_trajectories(config.trajectories_path, l.network, config.strict_trajectories);
    return l;
  });
  const RoadNetwork& network = loaded.network;
  const auto& trajectories = loaded.trajectories.trajectories;
  report.dropped_trajectories = loaded.trajectories.dropped;

  SpreadModel model = timed("estimate", [&] {
    if (config.model_path) return load_model(*config.model_path, network);
    return estimate_model(trajectories, network, config.hour, config.window, config.estimation);
  });
  save_model(model, network, config.out_dir / "model.json");

  EdgeVolumes volumes0 = timed("volumes", [&] {
    return initial_volumes(trajectories, network, config.window.window_start_s, model.speed_mps,
                           config.estimation.default_speed_mps);
  });
  save_volumes(volumes0, network, config.out_dir / "volumes.json");

  InfluenceIndex index = timed("acquire", [&] {
    AcquireOptions options;
    options.max_hops = config.max_hops;
    options.require_congested_source = config.require_congested_source;
    options.threads = config.threads;
    WindowInfluence windows =
        acquire(network, model, volumes0, config.window, config.formula, options);
    return tau_filter(windows, config.window.tau);
  });
  save_index(index, config.out_dir / "influence.json");

  report.seed_result = timed("identify", [&] {
    return run_strategy(index, config.strategy, config.rng_seed);
  });

  timed("report", [&] {
    report.covered_edges = edges_covered(trajectories).size();
    report.coverage_ratio = coverage_ratio(report.seed_result, trajectories);
    for (EdgeIndex seed : report.seed_result.seeds) {
      report.seed_ids.push_back(index.edge_ids[static_cast<std::size_t>(seed)]);
    }
    save_seed_result(report.seed_result, index, report.coverage_ratio,
                     config.out_dir / "seeds.json");
    nlohmann::json j;
    j["schema"] = kArtifactSchema;
    j["config"] = report.config_echo;
    j["seed_result"] = seed_result_json(report.seed_result, index, report.coverage_ratio);
    j["covered_edges"] = report.covered_edges;
    j["coverage_ratio"] = report.coverage_ratio;
    j["dropped_trajectories"] = report.dropped_trajectories;
    auto& timings = j["timings_ms"] = nlohmann::json::object();
    for (const auto& t : report.timings) timings[t.phase] = t.ms;
    write_json_file(j, config.out_dir / "report.json", "report file");
  });
  return report;
}

}  // namespace tbi
