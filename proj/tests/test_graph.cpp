#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tbi/errors.hpp"
#include "tbi/graph.hpp"

using namespace tbi;

namespace {

const char* kFig1Csv =
    "edge_id,from_node,to_node,length_m\n"
    "# worked example network\n"
    "e12,v1,v2,100\n"
    "e23,v2,v3,100\n"
    "e34,v3,v4,100\n"
    "e36,v3,v6,100\n"
    "e42,v4,v2,100\n"
    "e45,v4,v5,100\n"
    "e56,v5,v6,100\n"
    "e67,v6,v7,100\n"
    "e78,v7,v8,100\n"
    "e85,v8,v5,100\n";

const char* kTrajCsv =
    "traj_id,edge_id,timestamp_s\n"
    "tr1,e12,0\n"
    "tr1,e23,20\n"
    "tr1,e34,45\n"
    "tr2,e45,5\n";

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("load_network parses the worked-example network") {
  fixtures::TempDir dir("net");
  auto path = fixtures::write_file(dir, "net.csv", kFig1Csv);
  RoadNetwork net = load_network(path);
  CHECK(net.vertex_count() == 8);
  CHECK(net.edge_count() == 10);

  std::set<std::string> succ;
  for (EdgeIndex e : net.successors(net.require_edge("e23"))) {
    succ.insert(net.edge(e).id);
  }
  CHECK(succ == std::set<std::string>{"e34", "e36"});
}

TEST_CASE("load_network rejects an empty edge list") {
  fixtures::TempDir dir("net");
  auto path = fixtures::write_file(dir, "net.csv", "edge_id,from_node,to_node,length_m\n");
  CHECK_THROWS_WITH_AS(load_network(path), "empty network", ValidationError);
}

TEST_CASE("load_network rejects a zero-length edge and names it") {
  fixtures::TempDir dir("net");
  auto path = fixtures::write_file(dir, "net.csv",
                                   "edge_id,from_node,to_node,length_m\n"
                                   "e12,v1,v2,100\n"
                                   "eX,v2,v3,0\n");
  CHECK_THROWS_WITH_AS(load_network(path), "edge 'eX' has non-positive length", ValidationError);
}

TEST_CASE("load_network reports the row of a malformed cell") {
  fixtures::TempDir dir("net");
  auto path = fixtures::write_file(dir, "net.csv",
                                   "edge_id,from_node,to_node,length_m\n"
                                   "e12,v1,v2,abc\n");
  CHECK_THROWS_AS(load_network(path), ParseError);
}

TEST_CASE("duplicate edge ids are rejected") {
  fixtures::TempDir dir("net");
  auto path = fixtures::write_file(dir, "net.csv",
                                   "edge_id,from_node,to_node,length_m\n"
                                   "e12,v1,v2,100\n"
                                   "e12,v2,v3,100\n");
  CHECK_THROWS_AS(load_network(path), ValidationError);
}

TEST_CASE("network round-trips through save and load") {
  RoadNetwork net = fixtures::fig1_network();
  fixtures::TempDir dir("net");
  auto path = dir.file("saved.csv");
  save_network(net, path);
  RoadNetwork reloaded = load_network(path);
  CHECK(net.structurally_equal(reloaded));
}

TEST_CASE("out adjacency matches the tail-head relation") {
  RoadNetwork net = fixtures::fig1_network();
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    std::vector<EdgeIndex> expected;
    for (std::size_t x = 0; x < net.edge_count(); ++x) {
      if (net.edge(static_cast<EdgeIndex>(x)).from == net.edge(static_cast<EdgeIndex>(e)).to) {
        expected.push_back(static_cast<EdgeIndex>(x));
      }
    }
    CHECK(net.successors(static_cast<EdgeIndex>(e)) == expected);
  }
}

TEST_CASE("load_trajectories accepts adjacent steps and singletons") {
  fixtures::TempDir dir("traj");
  auto net_path = fixtures::write_file(dir, "net.csv", kFig1Csv);
  auto traj_path = fixtures::write_file(dir, "traj.csv", kTrajCsv);
  RoadNetwork net = load_network(net_path);
  TrajectoryLoad loaded = load_trajectories(traj_path, net);
  REQUIRE(loaded.trajectories.size() == 2);
  CHECK(loaded.dropped == 0);
  CHECK(loaded.trajectories[0].steps.size() == 3);
  CHECK(loaded.trajectories[1].steps.size() == 1);
}

TEST_CASE("a step on an unknown edge drops the trajectory with a warning count") {
  fixtures::TempDir dir("traj");
  auto net_path = fixtures::write_file(dir, "net.csv", kFig1Csv);
  auto traj_path = fixtures::write_file(dir, "traj.csv",
                                        "traj_id,edge_id,timestamp_s\n"
                                        "tr1,e12,0\n"
                                        "tr1,e_x,10\n"
                                        "tr2,e45,5\n");
  RoadNetwork net = load_network(net_path);
  TrajectoryLoad loaded = load_trajectories(traj_path, net);
  CHECK(loaded.trajectories.size() == 1);
  CHECK(loaded.dropped == 1);

  CHECK_THROWS_AS(load_trajectories(traj_path, net, /*strict=*/true), ValidationError);
}

TEST_CASE("non-adjacent and non-monotone steps drop the trajectory") {
  fixtures::TempDir dir("traj");
  auto net_path = fixtures::write_file(dir, "net.csv", kFig1Csv);
  RoadNetwork net = load_network(net_path);

  auto gap = fixtures::write_file(dir, "gap.csv",
                                  "traj_id,edge_id,timestamp_s\n"
                                  "tr1,e12,0\n"
                                  "tr1,e45,10\n");
  CHECK(load_trajectories(gap, net).dropped == 1);

  auto backwards = fixtures::write_file(dir, "backwards.csv",
                                        "traj_id,edge_id,timestamp_s\n"
                                        "tr1,e12,10\n"
                                        "tr1,e23,5\n");
  CHECK(load_trajectories(backwards, net).dropped == 1);
}

TEST_CASE("trajectories round-trip through save and load") {
  fixtures::TempDir dir("traj");
  auto net_path = fixtures::write_file(dir, "net.csv", kFig1Csv);
  auto traj_path = fixtures::write_file(dir, "traj.csv", kTrajCsv);
  RoadNetwork net = load_network(net_path);
  TrajectoryLoad loaded = load_trajectories(traj_path, net);
  auto saved = dir.file("saved.csv");
  save_trajectories(loaded.trajectories, net, saved);
  TrajectoryLoad reloaded = load_trajectories(saved, net);
  REQUIRE(reloaded.trajectories.size() == loaded.trajectories.size());
  for (std::size_t i = 0; i < loaded.trajectories.size(); ++i) {
    CHECK(reloaded.trajectories[i].id == loaded.trajectories[i].id);
    REQUIRE(reloaded.trajectories[i].steps.size() == loaded.trajectories[i].steps.size());
    for (std::size_t s = 0; s < loaded.trajectories[i].steps.size(); ++s) {
      CHECK(reloaded.trajectories[i].steps[s].edge == loaded.trajectories[i].steps[s].edge);
      CHECK(reloaded.trajectories[i].steps[s].entry_time_s ==
            loaded.trajectories[i].steps[s].entry_time_s);
    }
  }
}

TEST_CASE("edges_covered unions step edges") {
  RoadNetwork net = fixtures::fig1_network();
  Trajectory tr1{"tr1",
                 {{net.require_edge("e12"), 0}, {net.require_edge("e23"), 20},
                  {net.require_edge("e34"), 45}}};
  std::vector<Trajectory> trs{tr1};
  auto covered = edges_covered(trs);
  CHECK(covered == std::vector<EdgeIndex>{net.require_edge("e12"), net.require_edge("e23"),
                                          net.require_edge("e34")});

  CHECK(edges_covered(std::vector<Trajectory>{}).empty());

  Trajectory tr2{"tr2", {{net.require_edge("e23"), 0}}};
  std::vector<Trajectory> both{tr1, tr2};
  CHECK(edges_covered(both).size() == 3);  // shared edge counted once
}

TEST_CASE("edges_covered is monotone under adding trajectories") {
  RoadNetwork net = fixtures::fig1_network();
  SplitMix64 rng(7);
  std::vector<Trajectory> trs;
  std::vector<EdgeIndex> previous;
  for (int i = 0; i < 20; ++i) {
    Trajectory tr;
    tr.id = "t" + std::to_string(i);
    EdgeIndex e = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    double t = 0;
    for (int s = 0; s < 4; ++s) {
      tr.steps.push_back({e, t});
      t += 10;
      const auto& succ = net.successors(e);
      e = succ[static_cast<std::size_t>(rng.below(succ.size()))];
    }
    trs.push_back(tr);
    auto covered = edges_covered(trs);
    CHECK(std::includes(covered.begin(), covered.end(), previous.begin(), previous.end()));
    previous = covered;
  }
}

TEST_CASE("window config invariants") {
  WindowConfig cfg;
  cfg.monitor_window_s = 100;
  cfg.spread_window_s = 20;
  cfg.tau = 5;
  CHECK(cfg.batch_count() == 5);
  CHECK_NOTHROW(cfg.validate());
  cfg.tau = 6;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.tau = 1;
  cfg.spread_window_s = 200;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.spread_window_s = 20;
  cfg.theta = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

}  // TEST_SUITE
