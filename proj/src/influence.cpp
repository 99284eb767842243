#include "tbi/influence.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "tbi/errors.hpp"

namespace tbi {

namespace {

std::vector<EdgeIndex> intersect_sorted(const std::vector<EdgeIndex>& a,
                                        const std::vector<EdgeIndex>& b) {
  std::vector<EdgeIndex> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

void InfluenceIndex::check_duality() const {
  std::size_t n = influenced.size();
  if (reverse.size() != n || edge_ids.size() != n) {
    throw ValidationError("influence index arrays have inconsistent sizes");
  }
  for (std::size_t e = 0; e < n; ++e) {
    for (EdgeIndex target : influenced[e]) {
      if (target < 0 || static_cast<std::size_t>(target) >= n) {
        throw ValidationError("influenced set of '" + edge_ids[e] + "' references an unknown edge");
      }
    }
  }
  if (reverse != transpose_sets(influenced)) {
    throw ValidationError("influence index violates I/RI duality");
  }
}

std::vector<std::vector<EdgeIndex>> transpose_sets(
    const std::vector<std::vector<EdgeIndex>>& sets) {
  std::vector<std::vector<EdgeIndex>> reversed(sets.size());
  for (std::size_t e = 0; e < sets.size(); ++e) {
    for (EdgeIndex target : sets[e]) {
      reversed[static_cast<std::size_t>(target)].push_back(static_cast<EdgeIndex>(e));
    }
  }
  for (auto& set : reversed) std::sort(set.begin(), set.end());
  return reversed;
}

InfluenceIndex make_index(std::vector<std::string> edge_ids,
                          std::vector<std::vector<EdgeIndex>> influenced,
                          InfluenceFormula formula, int tau, int windows) {
  if (edge_ids.size() != influenced.size()) {
    throw ValidationError("edge id list and influenced sets differ in size");
  }
  for (auto& set : influenced) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  InfluenceIndex index;
  index.edge_ids = std::move(edge_ids);
  index.influenced = std::move(influenced);
  index.reverse = transpose_sets(index.influenced);
  index.formula = formula;
  index.tau = tau;
  index.windows = windows;
  index.check_duality();
  return index;
}

WindowInfluence acquire(const RoadNetwork& network, const SpreadModel& model,
                        const EdgeVolumes& volumes0, const WindowConfig& window,
                        InfluenceFormula formula, const AcquireOptions& options) {
  window.validate();
  std::size_t n = network.edge_count();
  if (volumes0.volumes.size() != n) {
    throw ValidationError("initial volumes must cover every edge");
  }
  // Reach sets depend only on lengths and speeds; computed once, reused by
  // every window.
  auto reach_index = compute_reach_index(network, model, window.spread_window_s, options.max_hops,
                                         options.threads);

  WindowInfluence result;
  result.edge_ids.reserve(n);
  for (std::size_t e = 0; e < n; ++e) result.edge_ids.push_back(network.edge(static_cast<EdgeIndex>(e)).id);
  result.formula = formula;

  int batches = window.batch_count();
  EdgeVolumes volumes = volumes0;
  result.volume_trace.push_back(volumes);
  for (int j = 0; j < batches; ++j) {
    // The congestion test uses the snapshot this window's step consumes, so
    // the first window reflects the initial conditions.
    std::vector<std::vector<EdgeIndex>> sets(n);
    for (std::size_t e = 0; e < n; ++e) {
      if (options.require_congested_source &&
          !is_congested(network, volumes, static_cast<EdgeIndex>(e), window.theta)) {
        continue;
      }
      for (const ReachEntry& entry : reach_index[e].neighbors) {
        double value = influence_value(formula, model, volumes, static_cast<EdgeIndex>(e),
                                       entry.edge, reach_index[e]);
        if (value > 0.0 && is_congested(network, volumes, entry.edge, window.theta)) {
          sets[e].push_back(entry.edge);
        }
      }
    }
    result.per_window.push_back(std::move(sets));
    volumes = spread_step(formula, network, model, volumes, reach_index);
    result.volume_trace.push_back(volumes);
  }
  return result;
}

InfluenceIndex tau_filter(const WindowInfluence& windows, int tau) {
  int batches = static_cast<int>(windows.per_window.size());
  if (tau < 1 || tau > batches) {
    throw ValidationError("tau out of range: " + std::to_string(tau) + " with " +
                          std::to_string(batches) + " windows");
  }
  std::size_t n = windows.edge_ids.size();
  std::vector<std::vector<EdgeIndex>> influenced(n);
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<EdgeIndex> merged;
    for (int start = 0; start + tau <= batches; ++start) {
      std::vector<EdgeIndex> run = windows.per_window[static_cast<std::size_t>(start)][e];
      for (int t = 1; t < tau && !run.empty(); ++t) {
        run = intersect_sorted(run, windows.per_window[static_cast<std::size_t>(start + t)][e]);
      }
      std::vector<EdgeIndex> next;
      std::set_union(merged.begin(), merged.end(), run.begin(), run.end(),
                     std::back_inserter(next));
      merged = std::move(next);
    }
    influenced[e] = std::move(merged);
  }
  return make_index(windows.edge_ids, std::move(influenced), windows.formula, tau, batches);
}

void save_index(const InfluenceIndex& index, const std::filesystem::path& path) {
  nlohmann::json j;
  j["formula"] = std::string(formula_label(index.formula));
  j["tau"] = index.tau;
  j["windows"] = index.windows;
  j["edges"] = index.edge_ids;
  auto& influenced = j["influenced"] = nlohmann::json::object();
  auto& reverse = j["reverse"] = nlohmann::json::object();
  for (std::size_t e = 0; e < index.edge_count(); ++e) {
    auto ids = [&](const std::vector<EdgeIndex>& set) {
      nlohmann::json arr = nlohmann::json::array();
      for (EdgeIndex target : set) arr.push_back(index.edge_ids[static_cast<std::size_t>(target)]);
      return arr;
    };
    influenced[index.edge_ids[e]] = ids(index.influenced[e]);
    reverse[index.edge_ids[e]] = ids(index.reverse[e]);
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write influence file " + path.string());
  out << j.dump(2) << "\n";
}

InfluenceIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open influence file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("influence file " + path.string() + ": " + e.what());
  }

  try {
    InfluenceIndex index;
    index.formula = parse_formula(j.at("formula").get<std::string>());
    index.tau = j.at("tau").get<int>();
    index.windows = j.at("windows").get<int>();
    const auto& influenced = j.at("influenced");
    if (j.contains("edges")) {
      index.edge_ids = j.at("edges").get<std::vector<std::string>>();
    } else {
      for (auto it = influenced.begin(); it != influenced.end(); ++it) {
        index.edge_ids.push_back(it.key());
      }
      std::sort(index.edge_ids.begin(), index.edge_ids.end());
    }
    std::unordered_map<std::string, EdgeIndex> id_to_index;
    for (std::size_t e = 0; e < index.edge_ids.size(); ++e) {
      if (!id_to_index.emplace(index.edge_ids[e], static_cast<EdgeIndex>(e)).second) {
        throw ValidationError("duplicate edge id '" + index.edge_ids[e] + "' in influence file");
      }
    }
    auto to_set = [&](const nlohmann::json& arr) {
      std::vector<EdgeIndex> set;
      for (const auto& id : arr) {
        auto it = id_to_index.find(id.get<std::string>());
        if (it == id_to_index.end()) {
          throw ValidationError("influence file references unknown edge '" +
                                id.get<std::string>() + "'");
        }
        set.push_back(it->second);
      }
      std::sort(set.begin(), set.end());
      return set;
    };
    if (influenced.size() != index.edge_ids.size()) {
      throw ValidationError("influenced map does not cover every edge");
    }
    index.influenced.assign(index.edge_ids.size(), {});
    for (auto it = influenced.begin(); it != influenced.end(); ++it) {
      auto id_it = id_to_index.find(it.key());
      if (id_it == id_to_index.end()) {
        throw ValidationError("influenced map references unknown edge '" + it.key() + "'");
      }
      index.influenced[static_cast<std::size_t>(id_it->second)] = to_set(it.value());
    }
    // The reverse sets are derivable; when the file carries them they must
    // agree with the regenerated transposition.
    index.reverse = transpose_sets(index.influenced);
    if (j.contains("reverse")) {
      std::vector<std::vector<EdgeIndex>> stored(index.edge_ids.size());
      const auto& reverse = j.at("reverse");
      for (auto it = reverse.begin(); it != reverse.end(); ++it) {
        auto id_it = id_to_index.find(it.key());
        if (id_it == id_to_index.end()) {
          throw ValidationError("reverse map references unknown edge '" + it.key() + "'");
        }
        stored[static_cast<std::size_t>(id_it->second)] = to_set(it.value());
      }
      if (stored != index.reverse) {
        throw ValidationError("influence file violates I/RI duality");
      }
    }
    index.check_duality();
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("influence file " + path.string() + ": " + e.what());
  }
}

}  // namespace tbi
