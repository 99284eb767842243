#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "tbi/errors.hpp"
#include "tbi/model.hpp"

using namespace tbi;

namespace {

// A -> B -> {C, D}, with one more hop after each fork arm.
RoadNetwork fork_network() {
  RoadNetwork net;
  net.add_edge("m", "A", "B", 100.0);
  net.add_edge("n1", "B", "C", 100.0);
  net.add_edge("n2", "B", "D", 100.0);
  net.add_edge("c1", "C", "E", 100.0);
  net.add_edge("c2", "D", "F", 100.0);
  net.finalize();
  return net;
}

WindowConfig single_window_hour() {
  WindowConfig cfg;
  cfg.monitor_window_s = 3600;
  cfg.spread_window_s = 3600;
  cfg.tau = 1;
  cfg.theta = 1.0;
  cfg.window_start_s = 0;
  return cfg;
}

Trajectory walk(const RoadNetwork& net, const std::string& id,
                std::initializer_list<std::pair<const char*, double>> steps) {
  Trajectory tr;
  tr.id = id;
  for (const auto& [edge, t] : steps) tr.steps.push_back({net.require_edge(edge), t});
  return tr;
}

// Independent occupancy scan: linear search over the step intervals instead
// of the binary search used by the implementation.
int oracle_occupancy(const Trajectory& tr, double t, const RoadNetwork& net,
                     const std::vector<double>& speeds) {
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    double start = tr.steps[k].entry_time_s;
    double end = k + 1 < tr.steps.size()
                     ? tr.steps[k + 1].entry_time_s
                     : start + net.edge(tr.steps[k].edge).length_m /
                                   speeds[static_cast<std::size_t>(tr.steps[k].edge)];
    bool inside = k + 1 < tr.steps.size() ? (t >= start && t < end) : (t >= start && t <= end);
    if (inside) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("estimation reproduces the 50-vehicle stay/move counts") {
  RoadNetwork net = fork_network();
  std::vector<Trajectory> trs;
  // 30 vehicles hold edge m across the whole window, 10 move on to n1 and 10
  // to n2, all still on the network at the window end.
  for (int i = 0; i < 30; ++i) {
    trs.push_back(walk(net, "stay" + std::to_string(i), {{"m", 0}, {"n1", 3700}}));
  }
  for (int i = 0; i < 10; ++i) {
    trs.push_back(walk(net, "to_n1_" + std::to_string(i), {{"m", 0}, {"n1", 600}, {"c1", 4000}}));
  }
  for (int i = 0; i < 10; ++i) {
    trs.push_back(walk(net, "to_n2_" + std::to_string(i), {{"m", 0}, {"n2", 700}, {"c2", 4000}}));
  }

  SpreadModel model = estimate_model(trs, net, 0, single_window_hour());
  EdgeIndex m = net.require_edge("m");
  CHECK(model.residual_of(m) == 30.0 / 50.0);
  // The moved-out total (20) is the divisor, not the stayer count.
  CHECK(model.probability(m, net.require_edge("n1")) == 10.0 / 20.0);
  CHECK(model.probability(m, net.require_edge("n2")) == 10.0 / 20.0);
  CHECK(model.probability(m, net.require_edge("n1")) +
            model.probability(m, net.require_edge("n2")) ==
        1.0);

  SUBCASE("duplicating every trajectory leaves the model unchanged") {
    std::vector<Trajectory> doubled = trs;
    doubled.insert(doubled.end(), trs.begin(), trs.end());
    SpreadModel model2 = estimate_model(doubled, net, 0, single_window_hour());
    CHECK(model2.residual == model.residual);
    CHECK(model2.diffusion == model.diffusion);
  }

  SUBCASE("estimation is deterministic") {
    SpreadModel model2 = estimate_model(trs, net, 0, single_window_hour());
    CHECK(model2.residual == model.residual);
    CHECK(model2.diffusion == model.diffusion);
    CHECK(model2.speed_mps == model.speed_mps);
  }
}

TEST_CASE("an edge whose vehicles all stay gets residual 1 and no entries") {
  RoadNetwork net = fork_network();
  std::vector<Trajectory> trs;
  for (int i = 0; i < 5; ++i) {
    trs.push_back(walk(net, "s" + std::to_string(i), {{"m", 0}, {"n1", 4000}}));
  }
  SpreadModel model = estimate_model(trs, net, 0, single_window_hour());
  EdgeIndex m = net.require_edge("m");
  CHECK(model.residual_of(m) == 1.0);
  CHECK(model.diffusion[static_cast<std::size_t>(m)].empty());
}

TEST_CASE("unobserved edges fall back to the configured residual") {
  RoadNetwork net = fork_network();
  std::vector<Trajectory> trs{walk(net, "s", {{"m", 0}, {"n1", 4000}})};
  EstimationOptions options;
  options.fallback_residual = 0.25;
  SpreadModel model = estimate_model(trs, net, 0, single_window_hour(), options);
  CHECK(model.residual_of(net.require_edge("c2")) == 0.25);
}

TEST_CASE("an hour without data is an error") {
  RoadNetwork net = fork_network();
  std::vector<Trajectory> trs{walk(net, "s", {{"m", 0}, {"n1", 4000}})};
  CHECK_THROWS_WITH_AS(estimate_model(trs, net, 5, single_window_hour()), "no data for hour 5",
                       ValidationError);
}

TEST_CASE("scripted chain matches an independent per-window recount") {
  RoadNetwork net = fork_network();
  SplitMix64 rng(11);
  std::vector<Trajectory> trs;
  const char* chain[] = {"m", "n1", "c1"};
  for (int i = 0; i < 40; ++i) {
    Trajectory tr;
    tr.id = "t" + std::to_string(i);
    double t = rng.range(0.0, 3000.0);
    int hops = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < hops; ++k) {
      tr.steps.push_back({net.require_edge(chain[k]), t});
      t += rng.range(20.0, 900.0);
    }
    trs.push_back(tr);
  }
  WindowConfig cfg = single_window_hour();
  cfg.spread_window_s = 600;  // six windows in the hour
  cfg.monitor_window_s = 3600;
  SpreadModel model = estimate_model(trs, net, 0, cfg);

  // Oracle: recompute speeds and counts with plain loops.
  std::vector<double> speeds(net.edge_count(), 10.0);
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    double sum = 0;
    int count = 0;
    for (const auto& tr : trs) {
      for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
        if (tr.steps[k].edge != static_cast<EdgeIndex>(e)) continue;
        if (tr.steps[k].entry_time_s >= 3600.0 || tr.steps[k].entry_time_s < 0) continue;
        sum += net.edge(tr.steps[k].edge).length_m /
               (tr.steps[k + 1].entry_time_s - tr.steps[k].entry_time_s);
        ++count;
      }
    }
    if (count > 0) speeds[e] = sum / count;
  }
  CHECK(model.speed_mps == speeds);

  std::map<EdgeIndex, double> stay, out_total;
  std::map<std::pair<EdgeIndex, EdgeIndex>, double> moved;
  for (int w = 0; w < 6; ++w) {
    double t0 = 600.0 * w;
    double t1 = t0 + 600.0;
    for (const auto& tr : trs) {
      int k0 = oracle_occupancy(tr, t0, net, speeds);
      if (k0 < 0) continue;
      int k1 = oracle_occupancy(tr, t1, net, speeds);
      EdgeIndex e = tr.steps[static_cast<std::size_t>(k0)].edge;
      if (k1 == k0) {
        stay[e] += 1;
      } else {
        out_total[e] += 1;
        if (k1 >= 0) moved[{e, tr.steps[static_cast<std::size_t>(k0) + 1].edge}] += 1;
      }
    }
  }
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    auto idx = static_cast<EdgeIndex>(e);
    double observed = stay[idx] + out_total[idx];
    if (observed == 0) {
      CHECK(model.residual_of(idx) == 1.0);
      continue;
    }
    CHECK(model.residual_of(idx) == stay[idx] / observed);
    for (const auto& [target, p] : model.diffusion[e]) {
      CHECK(p == moved[{idx, target}] / out_total[idx]);
    }
  }
}

TEST_CASE("initial volumes count parked trajectories") {
  RoadNetwork net = fixtures::fig1_network();
  SpreadModel model = fixtures::fig1_model(net);
  std::vector<Trajectory> trs;
  for (int i = 0; i < 20; ++i) {
    trs.push_back({"p" + std::to_string(i), {{net.require_edge("e12"), 0.0}}});
  }
  EdgeVolumes v = initial_volumes(trs, net, 0.0, model.speed_mps);
  CHECK(v.of(net.require_edge("e12")) == 20.0);
  CHECK(v.total() == 20.0);

  SUBCASE("a start time after every trajectory yields zero volumes") {
    EdgeVolumes empty = initial_volumes(trs, net, 1e6, model.speed_mps);
    CHECK(empty.total() == 0.0);
  }
}

TEST_CASE("initial volumes equal a per-trajectory interval oracle") {
  RoadNetwork net = fixtures::fig1_network();
  SpreadModel model = fixtures::fig1_model(net);
  SplitMix64 rng(23);
  std::vector<Trajectory> trs;
  for (int i = 0; i < 60; ++i) {
    Trajectory tr;
    tr.id = "t" + std::to_string(i);
    EdgeIndex e = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    double t = rng.range(0.0, 400.0);
    int hops = 1 + static_cast<int>(rng.below(5));
    for (int k = 0; k < hops; ++k) {
      tr.steps.push_back({e, t});
      t += rng.range(5.0, 60.0);
      const auto& succ = net.successors(e);
      e = succ[static_cast<std::size_t>(rng.below(succ.size()))];
    }
    trs.push_back(tr);
  }
  for (double when : {0.0, 50.0, 123.4, 250.0, 444.0}) {
    EdgeVolumes v = initial_volumes(trs, net, when, model.speed_mps);
    std::vector<double> expected(net.edge_count(), 0.0);
    for (const auto& tr : trs) {
      int k = oracle_occupancy(tr, when, net, model.speed_mps);
      if (k >= 0) expected[static_cast<std::size_t>(tr.steps[static_cast<std::size_t>(k)].edge)] += 1;
    }
    CHECK(v.volumes == expected);
  }
}

TEST_CASE("model JSON round-trips the worked-example table bit-identically") {
  RoadNetwork net = fixtures::fig1_network();
  SpreadModel model = fixtures::fig1_model(net);
  fixtures::TempDir dir("model");
  auto path = dir.file("model.json");
  save_model(model, net, path);
  SpreadModel reloaded = load_model(path, net);
  CHECK(reloaded.hour == model.hour);
  CHECK(reloaded.residual == model.residual);
  CHECK(reloaded.speed_mps == model.speed_mps);
  CHECK(reloaded.diffusion == model.diffusion);
}

TEST_CASE("model file with probability above one is rejected") {
  RoadNetwork net = fork_network();
  fixtures::TempDir dir("model");
  auto path = fixtures::write_file(dir, "bad.json", R"({
    "hour": 0,
    "residual": {"m": 0.5, "n1": 0.5, "n2": 0.5, "c1": 0.5, "c2": 0.5},
    "speed_mps": {"m": 10, "n1": 10, "n2": 10, "c1": 10, "c2": 10},
    "diffusion": [{"from": "m", "to": "n1", "p": 1.2}]
  })");
  CHECK_THROWS_AS(load_model(path, net), ValidationError);
}

TEST_CASE("model file with an empty diffusion map is valid") {
  RoadNetwork net = fork_network();
  fixtures::TempDir dir("model");
  auto path = fixtures::write_file(dir, "empty.json", R"({
    "hour": 3,
    "residual": {"m": 1.0, "n1": 1.0, "n2": 1.0, "c1": 1.0, "c2": 1.0},
    "speed_mps": {"m": 10, "n1": 10, "n2": 10, "c1": 10, "c2": 10},
    "diffusion": []
  })");
  SpreadModel model = load_model(path, net);
  CHECK(model.hour == 3);
  for (const auto& entries : model.diffusion) CHECK(entries.empty());
}

TEST_CASE("probability sums never exceed one for estimated models") {
  RoadNetwork net = fork_network();
  SplitMix64 rng(5);
  std::vector<Trajectory> trs;
  const char* arms[][3] = {{"m", "n1", "c1"}, {"m", "n2", "c2"}};
  for (int i = 0; i < 50; ++i) {
    Trajectory tr;
    tr.id = "t" + std::to_string(i);
    const char** arm = arms[rng.below(2)];
    double t = rng.range(0.0, 3000.0);
    int hops = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < hops; ++k) {
      tr.steps.push_back({net.require_edge(arm[k]), t});
      t += rng.range(10.0, 500.0);
    }
    trs.push_back(tr);
  }
  WindowConfig cfg = single_window_hour();
  cfg.spread_window_s = 300;
  SpreadModel model = estimate_model(trs, net, 0, cfg);
  CHECK_NOTHROW(model.validate(net));
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    double sum = 0;
    for (const auto& [_, p] : model.diffusion[e]) sum += p;
    CHECK(sum <= 1.0 + 1e-9);
  }
}

}  // TEST_SUITE
