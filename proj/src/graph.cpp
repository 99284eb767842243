#include "tbi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tbi/errors.hpp"

namespace tbi {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim ASCII whitespace
    auto begin = cell.find_first_not_of(" \t\r");
    auto end = cell.find_last_not_of(" \t\r");
    cells.push_back(begin == std::string::npos ? std::string{} : cell.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const char* what, std::size_t row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": cannot parse " + what + " from '" + cell + "'");
  }
}

}  // namespace

VertexIndex RoadNetwork::add_vertex(const std::string& id, std::optional<LatLon> coord) {
  auto it = vertex_index_.find(id);
  if (it != vertex_index_.end()) {
    if (coord && !vertex_coords_[static_cast<std::size_t>(it->second)]) {
      vertex_coords_[static_cast<std::size_t>(it->second)] = coord;
    }
    return it->second;
  }
  auto v = static_cast<VertexIndex>(vertex_ids_.size());
  vertex_ids_.push_back(id);
  vertex_coords_.push_back(coord);
  vertex_index_.emplace(id, v);
  return v;
}

EdgeIndex RoadNetwork::add_edge(const std::string& id, const std::string& from_vertex,
                                const std::string& to_vertex, double length_m) {
  if (edge_index_.contains(id)) {
    throw ValidationError("duplicate edge id '" + id + "'");
  }
  EdgeRecord rec;
  rec.id = id;
  rec.from = add_vertex(from_vertex);
  rec.to = add_vertex(to_vertex);
  rec.length_m = length_m;
  auto e = static_cast<EdgeIndex>(edges_.size());
  edges_.push_back(std::move(rec));
  edge_index_.emplace(id, e);
  finalized_ = false;
  return e;
}

void RoadNetwork::finalize() {
  if (edges_.empty()) throw ValidationError("empty network");
  for (const auto& rec : edges_) {
    if (!(rec.length_m > 0.0) || !std::isfinite(rec.length_m)) {
      throw ValidationError("edge '" + rec.id + "' has non-positive length");
    }
    if (rec.from == rec.to) {
      throw ValidationError("edge '" + rec.id + "' is a self-loop");
    }
  }
  // At most one edge per directed (from, to) pair; the opposite direction is
  // a distinct edge and is fine.
  std::unordered_map<std::uint64_t, const EdgeRecord*> seen_pairs;
  for (const auto& rec : edges_) {
    std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(rec.from)) << 32) |
                        static_cast<std::uint32_t>(rec.to);
    auto [it, inserted] = seen_pairs.emplace(key, &rec);
    if (!inserted) {
      throw ValidationError("edges '" + it->second->id + "' and '" + rec.id +
                            "' duplicate the directed pair " + vertex_id(rec.from) + "->" +
                            vertex_id(rec.to));
    }
  }

  // out_adjacency(e) = { e' : tail(e') == head(e) }
  std::vector<std::vector<EdgeIndex>> by_tail(vertex_ids_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    by_tail[static_cast<std::size_t>(edges_[e].from)].push_back(static_cast<EdgeIndex>(e));
  }
  out_adjacency_.assign(edges_.size(), {});
  in_adjacency_.assign(edges_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    out_adjacency_[e] = by_tail[static_cast<std::size_t>(edges_[e].to)];
    std::sort(out_adjacency_[e].begin(), out_adjacency_[e].end());
    for (EdgeIndex succ : out_adjacency_[e]) {
      in_adjacency_[static_cast<std::size_t>(succ)].push_back(static_cast<EdgeIndex>(e));
    }
  }
  for (auto& preds : in_adjacency_) std::sort(preds.begin(), preds.end());
  finalized_ = true;
}

EdgeIndex RoadNetwork::edge_index(std::string_view id) const {
  auto it = edge_index_.find(std::string(id));
  return it == edge_index_.end() ? -1 : it->second;
}

EdgeIndex RoadNetwork::require_edge(std::string_view id) const {
  EdgeIndex e = edge_index(id);
  if (e < 0) throw ValidationError("unknown edge id '" + std::string(id) + "'");
  return e;
}

bool RoadNetwork::has_full_coordinates() const {
  return std::all_of(vertex_coords_.begin(), vertex_coords_.end(),
                     [](const auto& c) { return c.has_value(); });
}

bool RoadNetwork::structurally_equal(const RoadNetwork& other) const {
  // Compared through external ids; internal vertex numbering may differ with
  // construction order.
  if (edges_.size() != other.edges_.size() || vertex_ids_.size() != other.vertex_ids_.size()) {
    return false;
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const EdgeRecord& mine = edges_[e];
    EdgeIndex theirs_index = other.edge_index(mine.id);
    if (theirs_index != static_cast<EdgeIndex>(e)) return false;  // same edge order
    const EdgeRecord& theirs = other.edges_[e];
    if (vertex_id(mine.from) != other.vertex_id(theirs.from) ||
        vertex_id(mine.to) != other.vertex_id(theirs.to) || mine.length_m != theirs.length_m) {
      return false;
    }
    if (out_adjacency_[e] != other.out_adjacency_[e]) return false;
  }
  for (std::size_t v = 0; v < vertex_ids_.size(); ++v) {
    auto it = other.vertex_index_.find(vertex_ids_[v]);
    if (it == other.vertex_index_.end()) return false;
    if (vertex_coords_[v] != other.vertex_coords_[static_cast<std::size_t>(it->second)]) {
      return false;
    }
  }
  return true;
}

int WindowConfig::batch_count() const {
  return static_cast<int>(std::floor(monitor_window_s / spread_window_s));
}

void WindowConfig::validate() const {
  if (!(monitor_window_s > 0.0)) throw ValidationError("monitor window must be positive");
  if (!(spread_window_s > 0.0)) throw ValidationError("spread window must be positive");
  if (spread_window_s > monitor_window_s) {
    throw ValidationError("spread window exceeds monitor window");
  }
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  if (tau < 1) throw ValidationError("tau must be a positive integer");
  if (tau > batch_count()) {
    throw ValidationError("tau " + std::to_string(tau) + " exceeds the " +
                          std::to_string(batch_count()) + " spread windows in the monitor window");
  }
}

RoadNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file " + path.string());

  RoadNetwork net;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  bool has_coords = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_row(line);
    if (!header_seen) {
      if (cells.size() != 4 && cells.size() != 8) {
        throw ParseError("network header must have 4 or 8 columns, got " +
                         std::to_string(cells.size()));
      }
      if (cells[0] != "edge_id" || cells[1] != "from_node" || cells[2] != "to_node" ||
          cells[3] != "length_m") {
        throw ParseError("unexpected network header '" + line + "'");
      }
      has_coords = cells.size() == 8;
      header_seen = true;
      continue;
    }
    if (cells.size() != (has_coords ? 8u : 4u)) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(has_coords ? 8 : 4) + " cells, got " +
                       std::to_string(cells.size()));
    }
    double length = parse_double(cells[3], "length_m", row);
    if (!(length > 0.0)) {
      throw ValidationError("edge '" + cells[0] + "' has non-positive length");
    }
    net.add_edge(cells[0], cells[1], cells[2], length);
    if (has_coords && !cells[4].empty() && !cells[5].empty()) {
      net.add_vertex(cells[1], LatLon{parse_double(cells[4], "lat_from", row),
                                      parse_double(cells[5], "lon_from", row)});
    }
    if (has_coords && !cells[6].empty() && !cells[7].empty()) {
      net.add_vertex(cells[2], LatLon{parse_double(cells[6], "lat_to", row),
                                      parse_double(cells[7], "lon_to", row)});
    }
  }
  if (!header_seen) throw ParseError("network file " + path.string() + " has no header");
  net.finalize();
  return net;
}

void save_network(const RoadNetwork& network, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write network file " + path.string());
  bool any_coords = false;
  for (std::size_t v = 0; v < network.vertex_count(); ++v) {
    if (network.vertex_coord(static_cast<VertexIndex>(v))) any_coords = true;
  }
  out.precision(17);
  out << "edge_id,from_node,to_node,length_m";
  if (any_coords) out << ",lat_from,lon_from,lat_to,lon_to";
  out << "\n";
  for (const auto& rec : network.edges()) {
    out << rec.id << ',' << network.vertex_id(rec.from) << ',' << network.vertex_id(rec.to) << ','
        << rec.length_m;
    if (any_coords) {
      for (VertexIndex v : {rec.from, rec.to}) {
        const auto& c = network.vertex_coord(v);
        if (c) {
          out << ',' << c->lat << ',' << c->lon;
        } else {
          out << ",,";
        }
      }
    }
    out << "\n";
  }
}

TrajectoryLoad load_trajectories(const std::filesystem::path& path, const RoadNetwork& network,
                                 bool strict) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file " + path.string());

  TrajectoryLoad result;
  Trajectory current;
  bool current_bad = false;
  std::string bad_reason;

  auto flush = [&] {
    if (current.steps.empty() && current.id.empty()) return;
    if (current_bad) {
      if (strict) throw ValidationError("trajectory '" + current.id + "': " + bad_reason);
      ++result.dropped;
    } else {
      result.trajectories.push_back(std::move(current));
    }
    current = Trajectory{};
    current_bad = false;
    bad_reason.clear();
  };

  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_row(line);
    if (!header_seen) {
      if (cells.size() != 3 || cells[0] != "traj_id" || cells[1] != "edge_id" ||
          cells[2] != "timestamp_s") {
        throw ParseError("unexpected trajectory header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 3) {
      throw ParseError("row " + std::to_string(row) + ": expected 3 cells, got " +
                       std::to_string(cells.size()));
    }
    if (cells[0] != current.id) {
      flush();
      current.id = cells[0];
    }
    double t = parse_double(cells[2], "timestamp_s", row);
    EdgeIndex e = network.edge_index(cells[1]);
    std::size_t step = current.steps.size();
    if (current_bad) continue;  // rest of a dropped trajectory
    if (e < 0) {
      current_bad = true;
      bad_reason = "step " + std::to_string(step) + " references unknown edge '" + cells[1] + "'";
      continue;
    }
    if (!current.steps.empty()) {
      if (!(t > current.steps.back().entry_time_s)) {
        current_bad = true;
        bad_reason = "step " + std::to_string(step) + " timestamp is not increasing";
        continue;
      }
      EdgeIndex prev = current.steps.back().edge;
      const auto& succ = network.successors(prev);
      if (!std::binary_search(succ.begin(), succ.end(), e)) {
        current_bad = true;
        bad_reason = "step " + std::to_string(step) + ": edge '" + cells[1] +
                     "' is not adjacent to previous edge '" + network.edge(prev).id + "'";
        continue;
      }
    }
    current.steps.push_back({e, t});
  }
  if (!header_seen) throw ParseError("trajectory file " + path.string() + " has no header");
  flush();
  return result;
}

void save_trajectories(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trajectory file " + path.string());
  out.precision(17);
  out << "traj_id,edge_id,timestamp_s\n";
  for (const auto& tr : trajectories) {
    for (const auto& step : tr.steps) {
      out << tr.id << ',' << network.edge(step.edge).id << ',' << step.entry_time_s << "\n";
    }
  }
}

std::vector<EdgeIndex> edges_covered(std::span<const Trajectory> trajectories) {
  std::vector<EdgeIndex> covered;
  for (const auto& tr : trajectories) {
    for (const auto& step : tr.steps) covered.push_back(step.edge);
  }
  std::sort(covered.begin(), covered.end());
  covered.erase(std::unique(covered.begin(), covered.end()), covered.end());
  return covered;
}

}  // namespace tbi
