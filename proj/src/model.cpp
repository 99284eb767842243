#include "tbi/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "tbi/errors.hpp"

namespace tbi {

namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr double kSecondsPerDay = 86400.0;

int hour_of(double t) {
  double h = std::floor(t / kSecondsPerHour);
  long long hh = static_cast<long long>(h) % 24;
  if (hh < 0) hh += 24;
  return static_cast<int>(hh);
}

// Index of the step occupying time t, or -1. The final step's occupancy ends
// at entry + length/speed (inclusive).
int occupying_step(const Trajectory& tr, double t, const RoadNetwork& network,
                   std::span<const double> speed_mps, double default_speed) {
  if (tr.steps.empty() || t < tr.steps.front().entry_time_s) return -1;
  auto it = std::upper_bound(tr.steps.begin(), tr.steps.end(), t,
                             [](double value, const TrajectoryStep& s) { return value < s.entry_time_s; });
  auto k = static_cast<std::size_t>(std::distance(tr.steps.begin(), it)) - 1;
  if (k + 1 < tr.steps.size()) return static_cast<int>(k);
  const auto& last = tr.steps.back();
  double speed = speed_mps.empty() ? default_speed : speed_mps[static_cast<std::size_t>(last.edge)];
  double dwell = network.edge(last.edge).length_m / speed;
  return t <= last.entry_time_s + dwell ? static_cast<int>(k) : -1;
}

}  // namespace

double SpreadModel::probability(EdgeIndex from, EdgeIndex to) const {
  const auto& entries = diffusion[static_cast<std::size_t>(from)];
  auto it = std::lower_bound(entries.begin(), entries.end(), to,
                             [](const auto& entry, EdgeIndex target) { return entry.first < target; });
  return (it != entries.end() && it->first == to) ? it->second : 0.0;
}

void SpreadModel::validate(const RoadNetwork& network) const {
  if (hour < 0 || hour > 23) throw ValidationError("model hour out of [0,23]");
  std::size_t n = network.edge_count();
  if (residual.size() != n || speed_mps.size() != n || diffusion.size() != n) {
    throw ValidationError("model arrays do not cover the network edges");
  }
  for (std::size_t e = 0; e < n; ++e) {
    const std::string& id = network.edge(static_cast<EdgeIndex>(e)).id;
    if (!(residual[e] >= 0.0 && residual[e] <= 1.0)) {
      throw ValidationError("residual ratio out of [0,1] for edge '" + id + "'");
    }
    if (!(speed_mps[e] > 0.0) || !std::isfinite(speed_mps[e])) {
      throw ValidationError("non-positive speed for edge '" + id + "'");
    }
    const auto& succ = network.successors(static_cast<EdgeIndex>(e));
    double sum = 0.0;
    EdgeIndex prev = -1;
    for (const auto& [target, p] : diffusion[e]) {
      if (target <= prev) throw ValidationError("diffusion entries unsorted for edge '" + id + "'");
      prev = target;
      if (!std::binary_search(succ.begin(), succ.end(), target)) {
        throw ValidationError("diffusion entry " + id + " -> " + network.edge(target).id +
                              " is not an adjacent pair");
      }
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("diffusion probability out of [0,1] for edge '" + id + "'");
      }
      sum += p;
    }
    if (sum > 1.0 + 1e-9) {
      throw ValidationError("diffusion probabilities of edge '" + id + "' sum to " +
                            std::to_string(sum));
    }
  }
}

double EdgeVolumes::total() const {
  double sum = 0.0;
  for (double v : volumes) sum += v;
  return sum;
}

SpreadModel estimate_model(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                           int hour, const WindowConfig& window, const EstimationOptions& options) {
  if (hour < 0 || hour > 23) throw ValidationError("hour out of [0,23]");
  if (trajectories.empty()) throw ValidationError("no trajectories given");
  double w = window.spread_window_s;
  if (!(w > 0.0)) throw ValidationError("spread window must be positive");

  std::size_t n = network.edge_count();

  // Speeds first: mean over observed traversals inside the hour. The final
  // steps of the occupancy rule below need them.
  std::vector<double> speed_sum(n, 0.0);
  std::vector<std::size_t> speed_count(n, 0);
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& tr : trajectories) {
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
      const auto& step = tr.steps[k];
      if (hour_of(step.entry_time_s) != hour) continue;
      double dt = tr.steps[k + 1].entry_time_s - step.entry_time_s;
      speed_sum[static_cast<std::size_t>(step.edge)] += network.edge(step.edge).length_m / dt;
      speed_count[static_cast<std::size_t>(step.edge)] += 1;
    }
    if (!tr.steps.empty()) {
      t_min = std::min(t_min, tr.steps.front().entry_time_s);
      t_max = std::max(t_max, tr.steps.back().entry_time_s);
    }
  }
  SpreadModel model;
  model.hour = hour;
  model.speed_mps.assign(n, options.default_speed_mps);
  for (std::size_t e = 0; e < n; ++e) {
    if (speed_count[e] > 0) model.speed_mps[e] = speed_sum[e] / static_cast<double>(speed_count[e]);
  }

  // Vehicle-window pairs: a vehicle on e at window start either stays on e,
  // moves on with its next edge, or has left the network by window end.
  std::vector<std::size_t> stay(n, 0), exits(n, 0);
  std::vector<std::map<EdgeIndex, std::size_t>> moved(n);
  std::size_t total_pairs = 0;

  auto first_day = static_cast<long long>(std::floor(t_min / kSecondsPerDay));
  auto last_day = static_cast<long long>(std::floor(t_max / kSecondsPerDay));
  int windows_per_hour = static_cast<int>(std::floor(kSecondsPerHour / w));
  for (long long day = first_day; day <= last_day; ++day) {
    double hour_start = static_cast<double>(day) * kSecondsPerDay + hour * kSecondsPerHour;
    for (int j = 0; j < windows_per_hour; ++j) {
      double t0 = hour_start + j * w;
      double t1 = t0 + w;
      for (const auto& tr : trajectories) {
        int k0 = occupying_step(tr, t0, network, model.speed_mps, options.default_speed_mps);
        if (k0 < 0) continue;
        auto e = static_cast<std::size_t>(tr.steps[static_cast<std::size_t>(k0)].edge);
        int k1 = occupying_step(tr, t1, network, model.speed_mps, options.default_speed_mps);
        ++total_pairs;
        if (k1 == k0) {
          ++stay[e];
        } else if (k1 < 0) {
          ++exits[e];
        } else {
          EdgeIndex next = tr.steps[static_cast<std::size_t>(k0) + 1].edge;
          ++moved[e][next];
        }
      }
    }
  }
  if (total_pairs == 0) {
    throw ValidationError("no data for hour " + std::to_string(hour));
  }

  model.residual.assign(n, options.fallback_residual);
  model.diffusion.assign(n, {});
  for (std::size_t e = 0; e < n; ++e) {
    std::size_t out_total = exits[e];
    for (const auto& [target, count] : moved[e]) out_total += count;
    std::size_t observed = stay[e] + out_total;
    if (observed == 0) continue;  // keep the fallback residual, no entries
    model.residual[e] = static_cast<double>(stay[e]) / static_cast<double>(observed);
    for (const auto& [target, count] : moved[e]) {
      model.diffusion[e].emplace_back(target,
                                      static_cast<double>(count) / static_cast<double>(out_total));
    }
  }
  return model;
}

EdgeVolumes initial_volumes(std::span<const Trajectory> trajectories, const RoadNetwork& network,
                            double window_start_s, std::span<const double> speed_mps,
                            double default_speed_mps) {
  EdgeVolumes result;
  result.volumes.assign(network.edge_count(), 0.0);
  for (const auto& tr : trajectories) {
    int k = occupying_step(tr, window_start_s, network, speed_mps, default_speed_mps);
    if (k >= 0) result.volumes[static_cast<std::size_t>(tr.steps[static_cast<std::size_t>(k)].edge)] += 1.0;
  }
  return result;
}

void save_model(const SpreadModel& model, const RoadNetwork& network,
                const std::filesystem::path& path) {
  nlohmann::json j;
  j["hour"] = model.hour;
  auto& residual = j["residual"] = nlohmann::json::object();
  auto& speeds = j["speed_mps"] = nlohmann::json::object();
  auto& diffusion = j["diffusion"] = nlohmann::json::array();
  for (std::size_t e = 0; e < network.edge_count(); ++e) {
    const std::string& id = network.edge(static_cast<EdgeIndex>(e)).id;
    residual[id] = model.residual[e];
    speeds[id] = model.speed_mps[e];
    for (const auto& [target, p] : model.diffusion[e]) {
      diffusion.push_back({{"from", id}, {"to", network.edge(target).id}, {"p", p}});
    }
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file " + path.string());
  out << j.dump(2) << "\n";
}

SpreadModel load_model(const std::filesystem::path& path, const RoadNetwork& network) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }
  SpreadModel model;
  try {
    model.hour = j.at("hour").get<int>();
    std::size_t n = network.edge_count();
    model.residual.assign(n, 0.0);
    model.speed_mps.assign(n, 0.0);
    model.diffusion.assign(n, {});
    const auto& residual = j.at("residual");
    const auto& speeds = j.at("speed_mps");
    if (residual.size() != n || speeds.size() != n) {
      throw ValidationError("model file does not cover every network edge");
    }
    for (auto it = residual.begin(); it != residual.end(); ++it) {
      model.residual[static_cast<std::size_t>(network.require_edge(it.key()))] = it.value().get<double>();
    }
    for (auto it = speeds.begin(); it != speeds.end(); ++it) {
      model.speed_mps[static_cast<std::size_t>(network.require_edge(it.key()))] = it.value().get<double>();
    }
    for (const auto& entry : j.at("diffusion")) {
      EdgeIndex from = network.require_edge(entry.at("from").get<std::string>());
      EdgeIndex to = network.require_edge(entry.at("to").get<std::string>());
      model.diffusion[static_cast<std::size_t>(from)].emplace_back(to, entry.at("p").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }
  for (auto& entries : model.diffusion) {
    std::sort(entries.begin(), entries.end());
  }
  model.validate(network);
  return model;
}

void save_volumes(const EdgeVolumes& volumes, const RoadNetwork& network,
                  const std::filesystem::path& path) {
  nlohmann::json j;
  auto& values = j["volumes"] = nlohmann::json::object();
  for (std::size_t e = 0; e < network.edge_count(); ++e) {
    values[network.edge(static_cast<EdgeIndex>(e)).id] = volumes.volumes[e];
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write volumes file " + path.string());
  out << j.dump(2) << "\n";
}

EdgeVolumes load_volumes(const std::filesystem::path& path, const RoadNetwork& network) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open volumes file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("volumes file " + path.string() + ": " + e.what());
  }
  EdgeVolumes result;
  result.volumes.assign(network.edge_count(), 0.0);
  try {
    const auto& values = j.at("volumes");
    for (auto it = values.begin(); it != values.end(); ++it) {
      double v = it.value().get<double>();
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ValidationError("negative or non-finite volume for edge '" + it.key() + "'");
      }
      result.volumes[static_cast<std::size_t>(network.require_edge(it.key()))] = v;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("volumes file " + path.string() + ": " + e.what());
  }
  return result;
}

}  // namespace tbi
