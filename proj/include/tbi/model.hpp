#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tbi/graph.hpp"

namespace tbi {

// Hour-bucketed diffusion probabilities p(e,e'), residual ratios r(e), and
// per-edge travel speeds, all estimated from trajectory statistics.
struct SpreadModel {
  int hour = 0;
  std::vector<double> residual;   // r(e) in [0,1], per edge index
  std::vector<double> speed_mps;  // positive, per edge index
  // Diffusion entries per source edge, sorted by target index. Entries exist
  // only for adjacent pairs.
  std::vector<std::vector<std::pair<EdgeIndex, double>>> diffusion;

  double residual_of(EdgeIndex e) const { return residual[static_cast<std::size_t>(e)]; }
  double speed_of(EdgeIndex e) const { return speed_mps[static_cast<std::size_t>(e)]; }
  // p(e,e') for adjacent pairs; 0 when no entry exists.
  double probability(EdgeIndex from, EdgeIndex to) const;

  void validate(const RoadNetwork& network) const;  // throws ValidationError
};

// Traffic volume f(e) for one spread-window state; real-valued after diffusion.
struct EdgeVolumes {
  std::vector<double> volumes;

  double of(EdgeIndex e) const { return volumes[static_cast<std::size_t>(e)]; }
  double total() const;
};

struct EstimationOptions {
  // Unobserved edges hold their traffic: they neither spawn nor absorb
  // influence.
  double fallback_residual = 1.0;
  double default_speed_mps = 10.0;
};

// Counts stay / per-successor transition / network-exit events over every
// spread window of the given hour-of-day (across all days in the data), then
// forms r(e) and p(e,e') as count ratios. Throws ValidationError when the
// hour has no vehicle-window pairs at all.
SpreadModel estimate_model(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                           int hour, const WindowConfig& window,
                           const EstimationOptions& options = {});

// f0(e) = trajectories occupying e at window_start_s. A trajectory occupies
// step k's edge on [entry(k), entry(k+1)) and its final edge on
// [entry(last), entry(last) + length/speed]. speed_mps may be empty, in which
// case default_speed_mps applies to every edge.
EdgeVolumes initial_volumes(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                            double window_start_s, std::span<const double> speed_mps = {},
                            double default_speed_mps = 10.0);

void save_model(const SpreadModel& model, const RoadNetwork& network,
                const std::filesystem::path& path);
SpreadModel load_model(const std::filesystem::path& path, const RoadNetwork& network);

void save_volumes(const EdgeVolumes& volumes, const RoadNetwork& network,
                  const std::filesystem::path& path);
EdgeVolumes load_volumes(const std::filesystem::path& path, const RoadNetwork& network);

}  // namespace tbi
