#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tbi/graph.hpp"

namespace tbi {

struct SyntheticSpec {
  int grid_rows = 6;
  int grid_cols = 6;
  int n_trajectories = 500;
  int hour = 8;
  std::uint64_t rng_seed = 1;
  double min_length_m = 50.0;
  double max_length_m = 450.0;
  double min_speed_mps = 5.0;
  double max_speed_mps = 15.0;
  // Traffic shape: walks start on one of n_hotspots edges with
  // hotspot_probability, spread over start_spread_s, and take between
  // min_steps and max_steps steps. home_bias is the chance a step heads
  // back toward the walk's origin, which keeps traffic orbiting its hotspot
  // instead of mixing to uniformity.
  int n_hotspots = 3;
  double hotspot_probability = 0.7;
  double start_spread_s = 3000.0;
  int min_steps = 4;
  int max_steps = 27;
  double home_bias = 0.0;
};

struct SyntheticData {
  RoadNetwork network;
  std::vector<Trajectory> trajectories;
  std::vector<double> speed_mps;  // the speeds the dwell times were drawn from
};

// Bidirectional grid road network plus seeded random-walk trajectories whose
// dwell times follow the generated per-edge speeds. Deterministic in
// rng_seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

void write_synthetic(const SyntheticData& data, const std::filesystem::path& network_csv,
                     const std::filesystem::path& trajectory_csv);

}  // namespace tbi
