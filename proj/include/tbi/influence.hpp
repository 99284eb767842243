#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tbi/spread.hpp"

namespace tbi {

// Raw per-window influenced-edge sets plus the volume snapshots they were
// judged against. Window j (1-based in prose) lives at per_window[j-1].
struct WindowInfluence {
  std::vector<std::string> edge_ids;
  InfluenceFormula formula = InfluenceFormula::ExampleConsistent;
  // per_window[j][e] = influenced edges of e in window j+1, sorted.
  std::vector<std::vector<std::vector<EdgeIndex>>> per_window;
  // Length per_window.size() + 1; volume_trace[j] is the snapshot window j+1
  // was judged against, the last entry is the post-run state.
  std::vector<EdgeVolumes> volume_trace;
};

// I({e}) after tau-consecutive filtering, plus the transposed RI sets.
// Every edge appears, possibly with empty sets.
struct InfluenceIndex {
  std::vector<std::string> edge_ids;
  std::vector<std::vector<EdgeIndex>> influenced;  // sorted
  std::vector<std::vector<EdgeIndex>> reverse;     // sorted
  InfluenceFormula formula = InfluenceFormula::ExampleConsistent;
  int tau = 0;
  int windows = 0;

  std::size_t edge_count() const { return influenced.size(); }
  // e in reverse(e') <=> e' in influenced(e); throws ValidationError.
  void check_duality() const;
};

std::vector<std::vector<EdgeIndex>> transpose_sets(
    const std::vector<std::vector<EdgeIndex>>& sets);

// Builds the reverse sets and validates; the test-friendly constructor.
InfluenceIndex make_index(std::vector<std::string> edge_ids,
                          std::vector<std::vector<EdgeIndex>> influenced,
                          InfluenceFormula formula = InfluenceFormula::ExampleConsistent,
                          int tau = 0, int windows = 0);

struct AcquireOptions {
  int max_hops = kDefaultMaxHops;
  // Def. 4's stricter reading: record e' only when e itself is congested too.
  bool require_congested_source = false;
  unsigned threads = 1;
};

// Phase one: for each of the floor(W/w) spread windows, record e' into
// I_j({e}) when Inf(e,e') > 0 and e' is congested against the window's
// starting volumes, then advance the volumes one spread step.
WindowInfluence acquire(const RoadNetwork& network, const SpreadModel& model,
                        const EdgeVolumes& volumes0, const WindowConfig& window,
                        InfluenceFormula formula, const AcquireOptions& options = {});

// I({e}) = union over j of the intersection of tau consecutive windows
// starting at j; reverse sets by transposition.
InfluenceIndex tau_filter(const WindowInfluence& windows, int tau);

void save_index(const InfluenceIndex& index, const std::filesystem::path& path);
InfluenceIndex load_index(const std::filesystem::path& path);

}  // namespace tbi
