#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tbi {

// External ids are opaque strings; all runtime state is keyed on dense
// indexes. The id <-> index mapping travels with every output file.
using VertexIndex = std::int32_t;
using EdgeIndex = std::int32_t;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const LatLon&) const = default;
};

struct EdgeRecord {
  std::string id;
  VertexIndex from = -1;
  VertexIndex to = -1;
  double length_m = 0.0;
  bool operator==(const EdgeRecord&) const = default;
};

class RoadNetwork {
public:
  // Returns the index of the (possibly pre-existing) vertex.
  VertexIndex add_vertex(const std::string& id, std::optional<LatLon> coord = std::nullopt);
  EdgeIndex add_edge(const std::string& id, const std::string& from_vertex,
                     const std::string& to_vertex, double length_m);

  // Builds out/in adjacency and checks the structural invariants; must be
  // called once after the last add_edge. Throws ValidationError.
  void finalize();

  std::size_t vertex_count() const { return vertex_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const EdgeRecord& edge(EdgeIndex e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<EdgeRecord>& edges() const { return edges_; }

  // -1 when unknown.
  EdgeIndex edge_index(std::string_view id) const;
  // Throws ValidationError when unknown.
  EdgeIndex require_edge(std::string_view id) const;

  const std::string& vertex_id(VertexIndex v) const { return vertex_ids_[static_cast<std::size_t>(v)]; }
  const std::optional<LatLon>& vertex_coord(VertexIndex v) const {
    return vertex_coords_[static_cast<std::size_t>(v)];
  }
  bool has_full_coordinates() const;

  // Edges e' with tail(e') == head(e), sorted by index.
  const std::vector<EdgeIndex>& successors(EdgeIndex e) const {
    return out_adjacency_[static_cast<std::size_t>(e)];
  }
  const std::vector<EdgeIndex>& predecessors(EdgeIndex e) const {
    return in_adjacency_[static_cast<std::size_t>(e)];
  }

  bool structurally_equal(const RoadNetwork& other) const;

private:
  std::vector<std::string> vertex_ids_;
  std::vector<std::optional<LatLon>> vertex_coords_;
  std::unordered_map<std::string, VertexIndex> vertex_index_;
  std::vector<EdgeRecord> edges_;
  std::unordered_map<std::string, EdgeIndex> edge_index_;
  std::vector<std::vector<EdgeIndex>> out_adjacency_;
  std::vector<std::vector<EdgeIndex>> in_adjacency_;
  bool finalized_ = false;
};

struct TrajectoryStep {
  EdgeIndex edge = -1;
  double entry_time_s = 0.0;
};

struct Trajectory {
  std::string id;
  std::vector<TrajectoryStep> steps;
};

// W, w, tau, theta and the monitor-window origin for one run.
struct WindowConfig {
  double monitor_window_s = 3600.0;
  double spread_window_s = 20.0;
  int tau = 3;
  double theta = 1.0;  // vehicles per meter
  double window_start_s = 0.0;

  // Number of spread windows per monitor window, floor(W / w).
  int batch_count() const;
  void validate() const;  // throws ValidationError
};

RoadNetwork load_network(const std::filesystem::path& path);
void save_network(const RoadNetwork& network, const std::filesystem::path& path);

struct TrajectoryLoad {
  std::vector<Trajectory> trajectories;
  // Trajectories dropped for unknown edges, non-adjacent consecutive steps,
  // or non-monotone timestamps (strict mode throws instead).
  std::size_t dropped = 0;
};

TrajectoryLoad load_trajectories(const std::filesystem::path& path, const RoadNetwork& network,
                                 bool strict = false);
void save_trajectories(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                       const std::filesystem::path& path);

// Sorted distinct edges appearing in any trajectory step.
std::vector<EdgeIndex> edges_covered(std::span<const Trajectory> trajectories);

}  // namespace tbi
