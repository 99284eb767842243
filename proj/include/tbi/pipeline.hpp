#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tbi/influence.hpp"
#include "tbi/model.hpp"
#include "tbi/selection.hpp"

namespace tbi {

struct StrategyConfig {
  std::string name = "bf";  // bf | sg | dp | rank | brute
  int k = 0;                // one of k / epsilon must be set; k wins
  double epsilon = 0.0;     // K = ceil(epsilon * |E|)
  double beta_fraction = 0.3;
  double alpha = 0.1;
  double delta = 0.05;
  double p_hat = 0.0;  // 0 = default to K / |E|
  int partitions = 4;
  int max_iters = 20;

  int resolve_k(std::size_t edge_count) const;  // throws ValidationError
};

struct PipelineConfig {
  std::filesystem::path network_path;
  std::filesystem::path trajectories_path;
  std::optional<std::filesystem::path> model_path;  // load instead of estimating
  std::filesystem::path out_dir = "out";
  int hour = 8;
  WindowConfig window;
  InfluenceFormula formula = InfluenceFormula::ExampleConsistent;
  StrategyConfig strategy;
  std::uint64_t rng_seed = 1;
  EstimationOptions estimation;
  int max_hops = kDefaultMaxHops;
  bool require_congested_source = false;
  bool strict_trajectories = false;
  unsigned threads = 1;
};

// JSON config, schema 1. Unknown keys are rejected so typos do not silently
// fall back to defaults.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json pipeline_config_json(const PipelineConfig& config);

struct PhaseTiming {
  std::string phase;
  double ms = 0.0;
};

struct RunReport {
  SeedResult seed_result;
  std::vector<std::string> seed_ids;
  double coverage_ratio = 0.0;
  std::size_t covered_edges = 0;
  std::size_t dropped_trajectories = 0;
  std::vector<PhaseTiming> timings;
  nlohmann::json config_echo;
};

inline constexpr int kArtifactSchema = 1;

// phi(S) / |edges covered by the trajectories|; 0 on an empty denominator.
double coverage_ratio(const SeedResult& result, std::span<const Trajectory> trajectories);

// load -> estimate (or load model) -> initial volumes -> acquire ->
// tau-filter -> selection. Persists model.json, volumes.json, influence.json,
// seeds.json and report.json under config.out_dir. Failures rethrow as
// PhaseError tagged with the phase.
RunReport run_pipeline(const PipelineConfig& config);

nlohmann::json seed_result_json(const SeedResult& result, const InfluenceIndex& index,
                                double coverage);
void save_seed_result(const SeedResult& result, const InfluenceIndex& index, double coverage,
                      const std::filesystem::path& path);
// Reads seeds.json back against the index it was produced from.
SeedResult load_seed_result(const std::filesystem::path& path, const InfluenceIndex& index,
                            double* coverage = nullptr);

// RFC 7946 FeatureCollection: one LineString per seed edge and one per
// influenced edge. Requires vertex coordinates.
void export_geojson(const SeedResult& result, const InfluenceIndex& index,
                    const RoadNetwork& network, const std::filesystem::path& path);

// Runs the configured selection strategy against an influence index.
SeedResult run_strategy(const InfluenceIndex& index, const StrategyConfig& strategy,
                        std::uint64_t rng_seed);

}  // namespace tbi
