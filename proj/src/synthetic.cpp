#include "tbi/synthetic.hpp"

#include <limits>
#include <string>

#include "tbi/errors.hpp"
#include "tbi/prng.hpp"

namespace tbi {

namespace {

std::string vertex_name(int r, int c) {
  return "v" + std::to_string(r) + "_" + std::to_string(c);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.grid_rows < 2 || spec.grid_cols < 2) {
    throw ValidationError("grid must be at least 2x2");
  }
  if (spec.n_trajectories < 1) throw ValidationError("need at least one trajectory");
  if (spec.hour < 0 || spec.hour > 23) throw ValidationError("hour out of [0,23]");
  if (!(spec.min_length_m > 0.0) || spec.min_length_m > spec.max_length_m) {
    throw ValidationError("bad edge length range");
  }
  if (!(spec.min_speed_mps > 0.0) || spec.min_speed_mps > spec.max_speed_mps) {
    throw ValidationError("bad speed range");
  }
  if (spec.n_hotspots < 1 || spec.min_steps < 1 || spec.min_steps > spec.max_steps ||
      !(spec.hotspot_probability >= 0.0 && spec.hotspot_probability <= 1.0) ||
      !(spec.start_spread_s > 0.0)) {
    throw ValidationError("bad traffic shape parameters");
  }

  SplitMix64 rng(spec.rng_seed);
  SyntheticData data;

  for (int r = 0; r < spec.grid_rows; ++r) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      data.network.add_vertex(vertex_name(r, c), LatLon{30.0 + 0.002 * r, 104.0 + 0.002 * c});
    }
  }
  // Both directions of every grid adjacency share the physical length;
  // speeds differ per direction.
  auto add_pair = [&](int r1, int c1, int r2, int c2) {
    double length = rng.range(spec.min_length_m, spec.max_length_m);
    const std::string a = vertex_name(r1, c1);
    const std::string b = vertex_name(r2, c2);
    data.network.add_edge(a + "-" + b, a, b, length);
    data.network.add_edge(b + "-" + a, b, a, length);
    data.speed_mps.push_back(rng.range(spec.min_speed_mps, spec.max_speed_mps));
    data.speed_mps.push_back(rng.range(spec.min_speed_mps, spec.max_speed_mps));
  };
  for (int r = 0; r < spec.grid_rows; ++r) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      if (c + 1 < spec.grid_cols) add_pair(r, c, r, c + 1);
      if (r + 1 < spec.grid_rows) add_pair(r, c, r + 1, c);
    }
  }
  data.network.finalize();

  std::size_t n = data.network.edge_count();

  // Manhattan distance between vertex grid positions, for hotspot placement
  // and the homing bias.
  std::vector<std::pair<int, int>> cell(data.network.vertex_count());
  for (int r = 0; r < spec.grid_rows; ++r) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      cell[static_cast<std::size_t>(r * spec.grid_cols + c)] = {r, c};
    }
  }
  auto distance = [&](VertexIndex a, VertexIndex b) {
    auto [ra, ca] = cell[static_cast<std::size_t>(a)];
    auto [rb, cb] = cell[static_cast<std::size_t>(b)];
    return std::abs(ra - rb) + std::abs(ca - cb);
  };

  // Hotspot start edges concentrate traffic; farthest-point placement keeps
  // the resulting congestion basins apart.
  std::vector<EdgeIndex> hotspots;
  hotspots.push_back(static_cast<EdgeIndex>(rng.below(n)));
  while (hotspots.size() < static_cast<std::size_t>(spec.n_hotspots)) {
    EdgeIndex best = -1;
    int best_distance = -1;
    for (std::size_t e = 0; e < n; ++e) {
      int nearest = std::numeric_limits<int>::max();
      for (EdgeIndex h : hotspots) {
        nearest = std::min(nearest, distance(data.network.edge(static_cast<EdgeIndex>(e)).from,
                                             data.network.edge(h).from));
      }
      if (nearest > best_distance) {
        best_distance = nearest;
        best = static_cast<EdgeIndex>(e);
      }
    }
    hotspots.push_back(best);
  }

  // Harmonic hotspot weights: the first district draws the most traffic.
  std::vector<double> hotspot_cdf;
  double weight_total = 0.0;
  for (std::size_t h = 0; h < hotspots.size(); ++h) {
    weight_total += 1.0 / static_cast<double>(h + 1);
    hotspot_cdf.push_back(weight_total);
  }
  auto draw_hotspot = [&]() {
    double u = rng.unit() * weight_total;
    for (std::size_t h = 0; h < hotspot_cdf.size(); ++h) {
      if (u <= hotspot_cdf[h]) return hotspots[h];
    }
    return hotspots.back();
  };

  double hour_start = spec.hour * 3600.0;
  for (int i = 0; i < spec.n_trajectories; ++i) {
    Trajectory tr;
    tr.id = "t" + std::to_string(i);
    EdgeIndex current = rng.unit() < spec.hotspot_probability
                            ? draw_hotspot()
                            : static_cast<EdgeIndex>(rng.below(n));
    VertexIndex origin = data.network.edge(current).from;
    double t = hour_start + rng.unit() * spec.start_spread_s;
    int steps = spec.min_steps +
                static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_steps - spec.min_steps + 1)));
    for (int s = 0; s < steps; ++s) {
      tr.steps.push_back({current, t});
      double dwell = data.network.edge(current).length_m /
                     data.speed_mps[static_cast<std::size_t>(current)] * rng.range(0.85, 1.15);
      t += dwell;
      const auto& succ = data.network.successors(current);
      EdgeIndex next;
      if (rng.unit() < spec.home_bias) {
        // Head back toward the origin vertex; ties resolved by draw order.
        next = succ.front();
        int best = distance(data.network.edge(next).to, origin);
        for (EdgeIndex cand : succ) {
          int d = distance(data.network.edge(cand).to, origin);
          if (d < best) {
            best = d;
            next = cand;
          }
        }
      } else {
        // Avoid the immediate U-turn when there is any alternative.
        EdgeIndex reverse = -1;
        for (EdgeIndex cand : succ) {
          if (data.network.edge(cand).to == data.network.edge(current).from) reverse = cand;
        }
        next = succ[static_cast<std::size_t>(rng.below(succ.size()))];
        if (next == reverse && succ.size() > 1) {
          while (next == reverse) {
            next = succ[static_cast<std::size_t>(rng.below(succ.size()))];
          }
        }
      }
      current = next;
    }
    data.trajectories.push_back(std::move(tr));
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& network_csv,
                     const std::filesystem::path& trajectory_csv) {
  save_network(data.network, network_csv);
  save_trajectories(data.trajectories, data.network, trajectory_csv);
}

}  // namespace tbi
