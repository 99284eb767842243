#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tbi/model.hpp"

namespace tbi {

// Two readings of the one-window influence value. The worked numbers and the
// outflow identity only hold for ExampleConsistent, which is therefore the
// default; EquationOne keeps the extra r(e') factor behind a switch.
enum class InfluenceFormula {
  ExampleConsistent,  // p(e,e') * f0(e) * (1 - r(e))
  EquationOne,        // p(e,e') * f0(e) * (1 - r(e)) * r(e')
};

std::string_view formula_label(InfluenceFormula formula);   // "example" | "eq1"
InfluenceFormula parse_formula(std::string_view label);     // throws ValidationError

inline constexpr int kDefaultMaxHops = 8;

struct ReachEntry {
  EdgeIndex edge = -1;
  double travel_time_s = 0.0;  // minimal over simple paths
  double probability = 0.0;    // direct p for adjacent pairs, path-aggregated otherwise
};

// Edges reachable from the head of `source` within one spread window,
// sorted by edge index; the source itself is never a member.
struct ReachSet {
  EdgeIndex source = -1;
  std::vector<ReachEntry> neighbors;

  const ReachEntry* find(EdgeIndex e) const;
  bool contains(EdgeIndex e) const { return find(e) != nullptr; }
};

// Seconds to traverse one edge at its model speed.
double traversal_time_s(const RoadNetwork& network, const SpreadModel& model, EdgeIndex e);

// Depth-first enumeration of simple successor paths from e, bounded by the
// time budget w and by max_hops. t(e,e') covers the edges after e up to and
// including e', so a direct successor costs one traversal of itself.
ReachSet reachable_neighbors(const RoadNetwork& network, const SpreadModel& model, EdgeIndex e,
                             double spread_window_s, int max_hops = kDefaultMaxHops);

// Adjacent pairs return the model entry; otherwise the sum over all simple
// paths within w of the hop-probability product times prod(1 - r) over the
// intermediate edges. 0 when no qualifying path exists.
double path_diffusion_probability(const RoadNetwork& network, const SpreadModel& model,
                                  EdgeIndex from, EdgeIndex to, double spread_window_s,
                                  int max_hops = kDefaultMaxHops);

// One ReachSet per edge. Thread count only splits the work; results are
// identical for any value.
std::vector<ReachSet> compute_reach_index(const RoadNetwork& network, const SpreadModel& model,
                                          double spread_window_s, int max_hops = kDefaultMaxHops,
                                          unsigned threads = 1);

// Inf(e, e') for one spread window; 0 when e' is outside the reach set of e.
double influence_value(InfluenceFormula formula, const SpreadModel& model,
                       const EdgeVolumes& volumes, EdgeIndex e, EdgeIndex to,
                       const ReachSet& reach_of_e);

// f(e) = f0(e) r(e) + sum of incoming influence values, all edges updated
// from the same pre-step snapshot.
EdgeVolumes spread_step(InfluenceFormula formula, const RoadNetwork& network,
                        const SpreadModel& model, const EdgeVolumes& volumes,
                        std::span<const ReachSet> reach_index);

// f(e) >= theta * len(e), boundary inclusive.
bool is_congested(const RoadNetwork& network, const EdgeVolumes& volumes, EdgeIndex e,
                  double theta);

}  // namespace tbi
