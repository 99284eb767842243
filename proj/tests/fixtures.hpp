#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tbi/influence.hpp"
#include "tbi/model.hpp"
#include "tbi/prng.hpp"
#include "tbi/selection.hpp"
#include "tbi/spread.hpp"

namespace fixtures {

// The 8-node, 10-edge worked example used throughout: all lengths 100 m, all
// speeds 10 m/s (one traversal = 10 s), residual 0.5 everywhere.
inline const std::vector<std::string>& fig1_edge_ids() {
  static const std::vector<std::string> ids = {"e12", "e23", "e34", "e36", "e42",
                                               "e45", "e56", "e67", "e78", "e85"};
  return ids;
}

inline tbi::RoadNetwork fig1_network() {
  tbi::RoadNetwork net;
  const double lat0 = 30.0, lon0 = 104.0;
  const std::vector<std::pair<double, double>> layout = {
      {0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 3}, {0, 3}, {0, 4}, {1, 4}};
  for (int v = 1; v <= 8; ++v) {
    net.add_vertex("v" + std::to_string(v),
                   tbi::LatLon{lat0 + 0.001 * layout[static_cast<std::size_t>(v - 1)].first,
                               lon0 + 0.001 * layout[static_cast<std::size_t>(v - 1)].second});
  }
  auto edge = [&](const std::string& id, int from, int to) {
    net.add_edge(id, "v" + std::to_string(from), "v" + std::to_string(to), 100.0);
  };
  edge("e12", 1, 2);
  edge("e23", 2, 3);
  edge("e34", 3, 4);
  edge("e36", 3, 6);
  edge("e42", 4, 2);
  edge("e45", 4, 5);
  edge("e56", 5, 6);
  edge("e67", 6, 7);
  edge("e78", 7, 8);
  edge("e85", 8, 5);
  net.finalize();
  return net;
}

inline tbi::SpreadModel fig1_model(const tbi::RoadNetwork& net) {
  tbi::SpreadModel model;
  model.hour = 18;
  model.residual.assign(net.edge_count(), 0.5);
  model.speed_mps.assign(net.edge_count(), 10.0);
  model.diffusion.assign(net.edge_count(), {});
  auto p = [&](const char* from, const char* to, double value) {
    model.diffusion[static_cast<std::size_t>(net.require_edge(from))].emplace_back(
        net.require_edge(to), value);
  };
  p("e12", "e23", 1.0);
  p("e23", "e34", 0.3);
  p("e23", "e36", 0.7);
  p("e34", "e42", 0.4);
  p("e34", "e45", 0.6);
  p("e36", "e67", 0.5);
  p("e42", "e23", 1.0);
  p("e45", "e56", 1.0);
  p("e56", "e67", 0.5);
  p("e67", "e78", 1.0);
  p("e78", "e85", 0.5);
  p("e85", "e56", 1.0);
  for (auto& entries : model.diffusion) std::sort(entries.begin(), entries.end());
  model.validate(net);
  return model;
}

inline tbi::EdgeVolumes fig1_initial_volumes(const tbi::RoadNetwork& net) {
  tbi::EdgeVolumes v;
  v.volumes.assign(net.edge_count(), 0.0);
  const std::map<std::string, double> values = {{"e12", 20}, {"e23", 40}, {"e34", 10},
                                                {"e36", 24}, {"e42", 16}, {"e45", 18},
                                                {"e56", 36}, {"e67", 20}, {"e78", 40},
                                                {"e85", 30}};
  for (const auto& [id, f] : values) v.volumes[static_cast<std::size_t>(net.require_edge(id))] = f;
  return v;
}

// Volumes after one spread window; e85 carries the value the update rule
// yields, 30*0.5 + 0.5*40*0.5 = 25.
inline std::map<std::string, double> fig1_after_one_step() {
  return {{"e12", 10}, {"e23", 38}, {"e34", 11}, {"e36", 26}, {"e42", 10},
          {"e45", 12}, {"e56", 42}, {"e67", 25}, {"e78", 30}, {"e85", 25}};
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tbi_" + tag + "_" + std::to_string(++counter) + "_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const TempDir& dir, const std::string& name,
                                        const std::string& content) {
  auto path = dir.file(name);
  std::ofstream out(path);
  out << content;
  return path;
}

// Test-only reference greedy that re-evaluates every candidate each round;
// the lazy implementation must match it exactly.
inline tbi::SeedResult naive_greedy(const tbi::InfluenceIndex& index, int k) {
  std::vector<tbi::EdgeIndex> seeds;
  std::vector<char> chosen(index.edge_count(), 0);
  std::vector<char> covered(index.edge_count(), 0);
  for (int round = 0; round < k; ++round) {
    int best_gain = -1;
    tbi::EdgeIndex best = -1;
    for (std::size_t e = 0; e < index.edge_count(); ++e) {
      if (chosen[e]) continue;
      int gain = 0;
      for (tbi::EdgeIndex t : index.influenced[e]) {
        if (!covered[static_cast<std::size_t>(t)]) ++gain;
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<tbi::EdgeIndex>(e);
      }
    }
    seeds.push_back(best);
    chosen[static_cast<std::size_t>(best)] = 1;
    for (tbi::EdgeIndex t : index.influenced[static_cast<std::size_t>(best)]) {
      covered[static_cast<std::size_t>(t)] = 1;
    }
  }
  tbi::SeedResult result;
  result.seeds = seeds;
  result.strategy = "naive";
  std::vector<char> cov2(index.edge_count(), 0);
  for (tbi::EdgeIndex s : seeds) {
    int gain = 0;
    for (tbi::EdgeIndex t : index.influenced[static_cast<std::size_t>(s)]) {
      if (!cov2[static_cast<std::size_t>(t)]) {
        cov2[static_cast<std::size_t>(t)] = 1;
        ++gain;
      }
    }
    result.marginal_gains.push_back(gain);
    result.phi += gain;
  }
  return result;
}

// Random influence index over n edges; density controls how full the sets are.
inline tbi::InfluenceIndex random_index(std::size_t n, tbi::SplitMix64& rng,
                                        double empty_prob = 0.3, std::size_t max_set = 5) {
  std::vector<std::string> ids;
  for (std::size_t e = 0; e < n; ++e) ids.push_back("e" + std::to_string(e));
  std::vector<std::vector<tbi::EdgeIndex>> influenced(n);
  for (std::size_t e = 0; e < n; ++e) {
    if (rng.unit() < empty_prob) continue;
    std::size_t size = 1 + rng.below(max_set);
    for (std::size_t i = 0; i < size; ++i) {
      influenced[e].push_back(static_cast<tbi::EdgeIndex>(rng.below(n)));
    }
  }
  return tbi::make_index(std::move(ids), std::move(influenced));
}

// Closed network: every vertex keeps an outgoing edge, so every edge has
// successors and the diffusion probabilities sum to exactly one -- the
// setting where one spread step conserves total volume.
struct ClosedFixture {
  tbi::RoadNetwork network;
  tbi::SpreadModel model;
  tbi::EdgeVolumes volumes;
};

inline ClosedFixture random_closed_fixture(tbi::SplitMix64& rng) {
  ClosedFixture fx;
  int n_vertices = 4 + static_cast<int>(rng.below(7));
  std::vector<std::string> names;
  for (int v = 0; v < n_vertices; ++v) names.push_back("w" + std::to_string(v));
  for (int v = 0; v < n_vertices; ++v) {
    std::size_t degree = 1 + rng.below(3);
    std::vector<int> targets;
    while (targets.size() < degree) {
      int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_vertices)));
      if (u == v) continue;
      if (std::find(targets.begin(), targets.end(), u) != targets.end()) continue;
      targets.push_back(u);
    }
    for (int u : targets) {
      fx.network.add_edge(names[static_cast<std::size_t>(v)] + ">" + names[static_cast<std::size_t>(u)],
                          names[static_cast<std::size_t>(v)], names[static_cast<std::size_t>(u)],
                          100.0);
    }
  }
  fx.network.finalize();

  std::size_t n = fx.network.edge_count();
  fx.model.hour = 0;
  fx.model.residual.assign(n, 0.0);
  fx.model.speed_mps.assign(n, 10.0);
  fx.model.diffusion.assign(n, {});
  for (std::size_t e = 0; e < n; ++e) {
    fx.model.residual[e] = rng.unit() * 0.95;
    const auto& succ = fx.network.successors(static_cast<tbi::EdgeIndex>(e));
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i = 0; i < succ.size(); ++i) {
      weights.push_back(0.05 + rng.unit());
      total += weights.back();
    }
    for (std::size_t i = 0; i < succ.size(); ++i) {
      fx.model.diffusion[e].emplace_back(succ[i], weights[i] / total);
    }
  }
  fx.volumes.volumes.assign(n, 0.0);
  for (std::size_t e = 0; e < n; ++e) fx.volumes.volumes[e] = rng.range(0.0, 100.0);
  return fx;
}

// Exhaustive simple-path oracle: materializes every successor path from
// `source` (bounded by max_hops), then derives minimal travel times and
// path-probability sums from the explicit path list.
struct PathOracle {
  std::map<tbi::EdgeIndex, double> min_time;
  std::map<tbi::EdgeIndex, double> prob_sum;
};

inline PathOracle enumerate_paths(const tbi::RoadNetwork& net, const tbi::SpreadModel& model,
                                  tbi::EdgeIndex source, double budget_s, int max_hops) {
  PathOracle oracle;
  std::vector<tbi::EdgeIndex> path{source};
  auto grow = [&](auto&& self) -> void {
    tbi::EdgeIndex tail = path.back();
    for (tbi::EdgeIndex next : net.successors(tail)) {
      if (std::find(path.begin(), path.end(), next) != path.end()) continue;
      path.push_back(next);
      double time = 0.0;
      for (std::size_t i = 1; i < path.size(); ++i) {
        time += net.edge(path[i]).length_m / model.speed_of(path[i]);
      }
      if (time <= budget_s && static_cast<int>(path.size()) - 1 <= max_hops) {
        double hop_prob = 1.0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
          hop_prob *= model.probability(path[i], path[i + 1]);
        }
        double residual_factor = 1.0;
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
          residual_factor *= 1.0 - model.residual_of(path[i]);
        }
        auto [it, inserted] = oracle.min_time.emplace(next, time);
        if (!inserted) it->second = std::min(it->second, time);
        oracle.prob_sum[next] += hop_prob * residual_factor;
        self(self);
      }
      path.pop_back();
    }
  };
  grow(grow);
  return oracle;
}

}  // namespace fixtures
