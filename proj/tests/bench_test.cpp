#include "crowdsim/bench.hpp"

#include <sstream>

#include "crowdsim/trace.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace crowdsim {
namespace {

ScenarioSpec tiny() {
  return parse_scenario(R"({
    "obstacles": [[0, 0, 6, 0], [6, 0, 6, 6], [6, 6, 0, 6], [0, 6, 0, 0]],
    "agents": [
      {"id": 0, "kind": "pedestrian", "x": 1, "y": 1, "targets": [{"type": "point", "x": 5, "y": 5}]},
      {"id": 7, "kind": "pedestrian", "x": 5, "y": 1, "targets": [{"type": "point", "x": 1, "y": 5}]}
    ]
  })");
}

TEST(PlaceRobotsTest, FreeAndDeterministic) {
  const auto spec = parse_scenario(testing::read_scenario("hall_200"));
  const auto a = place_robots(spec, 8);
  const auto b = place_robots(spec, 8);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.agents.size(), spec.agents.size() + 8);
  AgentId expected_id = 0;
  for (const auto& s : spec.agents) expected_id = std::max(expected_id, s.id + 1);
  for (std::size_t k = spec.agents.size(); k < a.agents.size(); ++k) {
    const auto& r = a.agents[k];
    EXPECT_EQ(r.kind, AgentKind::Robot);
    EXPECT_EQ(r.id, expected_id++);
    EXPECT_GE(spec.obstacles.clearance(r.start), r.radius);
  }
  EXPECT_NO_THROW(validate(a));
  // A smaller count is a prefix of a larger one.
  const auto c = place_robots(spec, 3);
  for (std::size_t k = 0; k < c.agents.size(); ++k) EXPECT_EQ(c.agents[k], a.agents[k]);
}

TEST(PlaceRobotsTest, SeedChangesPlacement) {
  auto spec = tiny();
  const auto a = place_robots(spec, 2);
  spec.config.seed += 1;
  EXPECT_NE(place_robots(spec, 2).agents.back().start, a.agents.back().start);
}

TEST(PlaceRobotsTest, FailsWhenCrowded) {
  const auto spec = parse_scenario(R"({
    "bounds": [0, 0, 1, 1],
    "obstacles": [[0, 0, 1, 0], [1, 0, 1, 1], [1, 1, 0, 1], [0, 1, 0, 0]],
    "agents": [{"id": 0, "kind": "pedestrian", "x": 0.5, "y": 0.5}]
  })");
  EXPECT_THROW(place_robots(spec, 1), PlacementFailure);
}

TEST(RunBenchTest, SingleRow) {
  const auto report = run_bench(tiny(), {0}, 5, 1);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& row = report.rows[0];
  EXPECT_EQ(row.robots, 0u);
  EXPECT_EQ(row.pedestrians, 2u);
  EXPECT_EQ(row.cycles, 5u);
  EXPECT_GT(row.mean_ms, 0.0);
  EXPECT_GE(row.std_ms, 0.0);
  EXPECT_FALSE(report.environment.empty());
  EXPECT_THROW(run_bench(tiny(), {0}, 0), Error);
}

TEST(RunBenchTest, CsvFormat) {
  BenchReport report;
  report.rows = {{0, 200, 100, 12.5, 0.25}, {5, 200, 100, 20.0, 1.0}};
  EXPECT_EQ(bench_csv(report),
            "robots,pedestrians,cycles,mean_ms,std_ms\n"
            "0,200,100,12.5000,0.2500\n"
            "5,200,100,20.0000,1.0000\n");
}

TEST(RunBenchTest, MeanAndSampleDeviation) {
  const auto [m, s] = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(m, 5.0);
  EXPECT_DOUBLE_EQ(s, std::sqrt(32.0 / 7.0));
}

TEST(TraceTest, LinesRoundTrip) {
  const CommandTrace trace{{0, 3, 0.5, -0.25}, {0, 4, 0.1, 0.0}, {7, 3, 1e-17, 3.0}};
  std::stringstream text;
  for (const auto& e : trace) text << trace_line(e) << "\n\n";
  EXPECT_EQ(read_trace(text), trace);
  EXPECT_EQ(trace_line(trace[0]), R"({"tick":0,"robot_id":3,"linear":0.5,"angular":-0.25})");

  std::stringstream backwards(trace_line(trace[2]) + "\n" + trace_line(trace[0]) + "\n");
  EXPECT_THROW(read_trace(backwards), Error);
  std::stringstream broken("{\"tick\":1}\n");
  EXPECT_THROW(read_trace(broken), Error);
}

TEST(TraceTest, ReplayAppliesCommandsAtTheirTick) {
  auto spec = place_robots(tiny(), 1);
  const AgentId robot = spec.agents.back().id;
  const CommandTrace trace{{2, robot, 0.5, 0.0}};
  const auto log = replay(spec, trace, 4, 1);
  ASSERT_EQ(log.size(), 5u);

  Simulation sim(spec, {1});
  std::vector<std::string> expected{trajectory_line(sim.snapshot())};
  for (int k = 0; k < 4; ++k) {
    CommandMap commands;
    if (k == 2) commands[robot] = {0.5, 0.0, 2};
    sim.step(commands);
    expected.push_back(trajectory_line(sim.snapshot()));
  }
  EXPECT_EQ(log, expected);
  EXPECT_NE(log, replay(spec, {}, 4, 1));
}

}  // namespace
}  // namespace crowdsim
