#include "tbi/spread.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "tbi/errors.hpp"

namespace tbi {

namespace {

// Per-source scratch for the simple-path enumeration.
struct PathScan {
  std::vector<double> min_time;   // +inf when unreached
  std::vector<double> prob_sum;   // path-aggregated probability
  std::vector<char> on_path;
};

void explore(const RoadNetwork& network, const SpreadModel& model, EdgeIndex current,
             double time_so_far, double hop_prob, double inter_residual, int hops_left,
             double budget_s, PathScan& scan) {
  for (EdgeIndex next : network.successors(current)) {
    if (scan.on_path[static_cast<std::size_t>(next)]) continue;
    double t = time_so_far + traversal_time_s(network, model, next);
    if (t > budget_s) continue;
    double p = hop_prob * model.probability(current, next);
    auto n = static_cast<std::size_t>(next);
    scan.min_time[n] = std::min(scan.min_time[n], t);
    scan.prob_sum[n] += p * inter_residual;
    if (hops_left > 1) {
      scan.on_path[n] = 1;
      explore(network, model, next, t, p,
              inter_residual * (1.0 - model.residual_of(next)), hops_left - 1, budget_s, scan);
      scan.on_path[n] = 0;
    }
  }
}

PathScan scan_from(const RoadNetwork& network, const SpreadModel& model, EdgeIndex source,
                   double budget_s, int max_hops) {
  PathScan scan;
  scan.min_time.assign(network.edge_count(), std::numeric_limits<double>::infinity());
  scan.prob_sum.assign(network.edge_count(), 0.0);
  scan.on_path.assign(network.edge_count(), 0);
  scan.on_path[static_cast<std::size_t>(source)] = 1;
  explore(network, model, source, 0.0, 1.0, 1.0, max_hops, budget_s, scan);
  return scan;
}

}  // namespace

std::string_view formula_label(InfluenceFormula formula) {
  return formula == InfluenceFormula::ExampleConsistent ? "example" : "eq1";
}

InfluenceFormula parse_formula(std::string_view label) {
  if (label == "example") return InfluenceFormula::ExampleConsistent;
  if (label == "eq1") return InfluenceFormula::EquationOne;
  throw ValidationError("unknown influence formula '" + std::string(label) +
                        "' (expected 'example' or 'eq1')");
}

const ReachEntry* ReachSet::find(EdgeIndex e) const {
  auto it = std::lower_bound(neighbors.begin(), neighbors.end(), e,
                             [](const ReachEntry& entry, EdgeIndex target) { return entry.edge < target; });
  return (it != neighbors.end() && it->edge == e) ? &*it : nullptr;
}

double traversal_time_s(const RoadNetwork& network, const SpreadModel& model, EdgeIndex e) {
  return network.edge(e).length_m / model.speed_of(e);
}

ReachSet reachable_neighbors(const RoadNetwork& network, const SpreadModel& model, EdgeIndex e,
                             double spread_window_s, int max_hops) {
  if (!(spread_window_s > 0.0)) throw ValidationError("spread window must be positive");
  PathScan scan = scan_from(network, model, e, spread_window_s, max_hops);
  ReachSet reach;
  reach.source = e;
  const auto& succ = network.successors(e);
  for (std::size_t x = 0; x < network.edge_count(); ++x) {
    if (static_cast<EdgeIndex>(x) == e || !std::isfinite(scan.min_time[x])) continue;
    bool adjacent = std::binary_search(succ.begin(), succ.end(), static_cast<EdgeIndex>(x));
    reach.neighbors.push_back({static_cast<EdgeIndex>(x), scan.min_time[x],
                               adjacent ? model.probability(e, static_cast<EdgeIndex>(x))
                                        : scan.prob_sum[x]});
  }
  return reach;
}

double path_diffusion_probability(const RoadNetwork& network, const SpreadModel& model,
                                  EdgeIndex from, EdgeIndex to, double spread_window_s,
                                  int max_hops) {
  const auto& succ = network.successors(from);
  if (std::binary_search(succ.begin(), succ.end(), to)) {
    return model.probability(from, to);
  }
  PathScan scan = scan_from(network, model, from, spread_window_s, max_hops);
  return scan.prob_sum[static_cast<std::size_t>(to)];
}

std::vector<ReachSet> compute_reach_index(const RoadNetwork& network, const SpreadModel& model,
                                          double spread_window_s, int max_hops, unsigned threads) {
  std::size_t n = network.edge_count();
  std::vector<ReachSet> index(n);
  unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t e = 0; e < n; ++e) {
      index[e] = reachable_neighbors(network, model, static_cast<EdgeIndex>(e), spread_window_s,
                                     max_hops);
    }
    return index;
  }
  // Strided assignment; each slot is written by exactly one worker, so the
  // result does not depend on the thread count.
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned worker = 0; worker < workers; ++worker) {
    pool.emplace_back([&, worker] {
      for (std::size_t e = worker; e < n; e += workers) {
        index[e] = reachable_neighbors(network, model, static_cast<EdgeIndex>(e), spread_window_s,
                                       max_hops);
      }
    });
  }
  for (auto& t : pool) t.join();
  return index;
}

double influence_value(InfluenceFormula formula, const SpreadModel& model,
                       const EdgeVolumes& volumes, EdgeIndex e, EdgeIndex to,
                       const ReachSet& reach_of_e) {
  const ReachEntry* entry = reach_of_e.find(to);
  if (entry == nullptr) return 0.0;
  double value = entry->probability * volumes.of(e) * (1.0 - model.residual_of(e));
  if (formula == InfluenceFormula::EquationOne) value *= model.residual_of(to);
  return value;
}

EdgeVolumes spread_step(InfluenceFormula formula, const RoadNetwork& network,
                        const SpreadModel& model, const EdgeVolumes& volumes,
                        std::span<const ReachSet> reach_index) {
  std::size_t n = network.edge_count();
  if (reach_index.size() != n || volumes.volumes.size() != n) {
    throw ValidationError("reach index and volumes must cover every edge");
  }
  EdgeVolumes next;
  next.volumes.assign(n, 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    next.volumes[e] = volumes.volumes[e] * model.residual_of(static_cast<EdgeIndex>(e));
  }
  // Fixed source-then-neighbor order keeps the floating-point sums
  // bit-reproducible.
  for (std::size_t e = 0; e < n; ++e) {
    double outflow_base = volumes.volumes[e] * (1.0 - model.residual_of(static_cast<EdgeIndex>(e)));
    if (outflow_base == 0.0) continue;
    for (const ReachEntry& entry : reach_index[e].neighbors) {
      double value = entry.probability * outflow_base;
      if (formula == InfluenceFormula::EquationOne) value *= model.residual_of(entry.edge);
      next.volumes[static_cast<std::size_t>(entry.edge)] += value;
    }
  }
  return next;
}

bool is_congested(const RoadNetwork& network, const EdgeVolumes& volumes, EdgeIndex e,
                  double theta) {
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  return volumes.of(e) >= theta * network.edge(e).length_m;
}

}  // namespace tbi
