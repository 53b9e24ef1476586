#include "crowdsim/server.hpp"

#include <thread>

#include "client.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace crowdsim {
namespace {

using namespace std::chrono_literals;

// Room with two robots and one pedestrian walking across.
ScenarioSpec two_robot_room() {
  return parse_scenario(R"({
    "name": "two_robots",
    "bounds": [-1, -1, 11, 11],
    "obstacles": [[0, 0, 10, 0], [10, 0, 10, 10], [10, 10, 0, 10], [0, 10, 0, 0]],
    "agents": [
      {"id": 1, "kind": "robot", "x": 2, "y": 2},
      {"id": 2, "kind": "robot", "x": 2, "y": 8, "heading": 1.5707963267948966},
      {"id": 5, "kind": "pedestrian", "x": 8, "y": 5, "targets": [{"type": "point", "x": 5, "y": 5}]}
    ],
    "config": {"laser": {"beam_count": 21}}
  })");
}

class ServerFixture {
 public:
  explicit ServerFixture(ServerOptions options, ScenarioSpec spec = two_robot_room())
      : server_(std::move(spec), with_free_port(std::move(options))),
        thread_([this](std::stop_token stop) { server_.run(stop); }) {}
  ~ServerFixture() {
    thread_.request_stop();
    if (thread_.joinable()) thread_.join();
  }
  std::uint16_t port() const { return server_.port(); }
  void join() { thread_.join(); }
  const Server& server() const { return server_; }

 private:
  static ServerOptions with_free_port(ServerOptions o) {
    o.port = 0;
    return o;
  }
  Server server_;
  std::jthread thread_;
};

ServerOptions lockstep() {
  ServerOptions o;
  o.mode = ServeMode::Lockstep;
  o.threads = 1;
  return o;
}

template <typename T>
T expect(testing::LineClient& c) {
  auto m = c.read();
  if (!m) throw std::runtime_error("no message");
  if (!std::holds_alternative<T>(*m)) throw std::runtime_error("unexpected message: " + encode(*m));
  return std::get<T>(*m);
}

TEST(ServerTest, HelloWelcome) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(HelloMsg{});
  const auto w = expect<WelcomeMsg>(c);
  EXPECT_EQ(w.version, 1);
  EXPECT_EQ(w.scenario, "two_robots");
  EXPECT_EQ(w.dt, 0.1);
  EXPECT_EQ(w.robots, (std::vector<AgentId>{1, 2}));
}

TEST(ServerTest, VersionMismatch) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(HelloMsg{2});
  EXPECT_EQ(expect<ErrorMsg>(c).code, "version_mismatch");
}

TEST(ServerTest, ScanSubscriptionThenStep) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(SubscribeMsg{1, Topic::Scan});
  c.send(StepMsg{1});
  const auto scan = expect<ScanMsg>(c).scan;
  EXPECT_EQ(scan.robot_id, 1);
  EXPECT_EQ(scan.tick, 1u);
  EXPECT_EQ(scan.ranges.size(), 21u);
  EXPECT_EQ(expect<SteppedMsg>(c).tick, 1u);
  EXPECT_FALSE(c.read_line(300ms).has_value());
}

TEST(ServerTest, ErrorsKeepTheSessionAlive) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(CmdVelMsg{9, 1.0, 0.0});
  EXPECT_EQ(expect<ErrorMsg>(c).code, "unknown_robot");
  c.send(SubscribeMsg{5, Topic::Scan});
  EXPECT_EQ(expect<ErrorMsg>(c).code, "unknown_robot");
  c.send_line("{\"type\":\"cmd_vel\",");
  EXPECT_EQ(expect<ErrorMsg>(c).code, "malformed");
  c.send_line(R"({"type":"warp"})");
  EXPECT_EQ(expect<ErrorMsg>(c).code, "unknown_type");
  c.send(SteppedMsg{3});
  EXPECT_EQ(expect<ErrorMsg>(c).code, "unexpected_type");
  c.send(HelloMsg{});
  EXPECT_EQ(expect<WelcomeMsg>(c).robots.size(), 2u);
}

TEST(ServerTest, TwoClientsCommandDifferentRobots) {
  ServerFixture f(lockstep());
  testing::LineClient a(f.port());
  testing::LineClient b(f.port());
  a.send(CmdVelMsg{1, 1.0, 0.0});
  b.send(CmdVelMsg{2, 0.5, 0.0});
  // Round-trip on each connection so both commands are queued before the step.
  a.send(HelloMsg{});
  expect<WelcomeMsg>(a);
  b.send(HelloMsg{});
  expect<WelcomeMsg>(b);
  a.send(SubscribeMsg{std::nullopt, Topic::State});
  a.send(StepMsg{1});
  const auto state = expect<StateMsg>(a).snapshot;
  EXPECT_EQ(expect<SteppedMsg>(a).tick, 1u);
  const auto pose = [&](AgentId id) {
    return *std::find_if(state.agents.begin(), state.agents.end(), [&](const AgentPose& p) { return p.id == id; });
  };
  EXPECT_NEAR(pose(1).position.x, 2.1, 1e-12);
  EXPECT_NEAR(pose(1).position.y, 2.0, 1e-12);
  EXPECT_NEAR(pose(2).position.x, 2.0, 1e-12);
  EXPECT_NEAR(pose(2).position.y, 8.05, 1e-12);
}

TEST(ServerTest, LastCommandWins) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(SubscribeMsg{std::nullopt, Topic::State});
  c.send(CmdVelMsg{1, 1.0, 0.0});
  c.send(CmdVelMsg{1, -0.5, 0.0});
  c.send(CmdVelMsg{1, 0.3, 0.0});
  c.send(StepMsg{2});
  expect<StateMsg>(c);
  const auto second = expect<StateMsg>(c).snapshot;
  EXPECT_EQ(expect<SteppedMsg>(c).tick, 2u);
  // Held for both ticks.
  EXPECT_NEAR(second.agents[0].position.x, 2.06, 1e-12);
}

TEST(ServerTest, TickCountMatchesAcknowledgedSteps) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  std::uint64_t requested = 0;
  for (std::uint64_t n : {1u, 3u, 2u, 5u}) {
    c.send(StepMsg{n});
    requested += n;
    EXPECT_EQ(expect<SteppedMsg>(c).tick, requested);
  }
}

TEST(ServerTest, PublishedStateMatchesEngine) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(SubscribeMsg{std::nullopt, Topic::State});
  c.send(SubscribeMsg{2, Topic::Scan});
  Simulation reference(two_robot_room(), {1});
  for (int t = 0; t < 15; ++t) {
    const CommandMap cmds{{1, {0.2 * (t % 3), 0.3, 0}}, {2, {0.4, -0.2, 0}}};
    for (const auto& [id, cmd] : cmds) c.send(CmdVelMsg{id, cmd.linear, cmd.angular});
    c.send(StepMsg{1});
    reference.step(cmds, {.sense = true});
    EXPECT_EQ(expect<ScanMsg>(c).scan, reference.latest_scans()[1]);
    EXPECT_EQ(expect<StateMsg>(c).snapshot, reference.snapshot());
    expect<SteppedMsg>(c);
  }
}

TEST(ServerTest, ByeClosesTheConnection) {
  ServerFixture f(lockstep());
  testing::LineClient c(f.port());
  c.send(ByeMsg{});
  EXPECT_TRUE(c.closed_by_peer());
  testing::LineClient d(f.port());
  d.send(HelloMsg{});
  expect<WelcomeMsg>(d);
}

TEST(ServerTest, RealtimeStepsOnItsOwn) {
  auto options = lockstep();
  options.mode = ServeMode::Realtime;
  options.rate_hz = 50.0;
  ServerFixture f(options);
  testing::LineClient c(f.port());
  c.send(SubscribeMsg{std::nullopt, Topic::State});
  c.send(StepMsg{1});
  std::uint64_t last = 0;
  int states = 0;
  bool refused = false;
  while (states < 5) {
    auto m = c.read();
    ASSERT_TRUE(m.has_value());
    if (auto* e = std::get_if<ErrorMsg>(&*m)) {
      EXPECT_EQ(e->code, "not_lockstep");
      refused = true;
    } else {
      const auto& s = std::get<StateMsg>(*m).snapshot;
      EXPECT_GT(s.tick, last);
      last = s.tick;
      ++states;
    }
  }
  EXPECT_TRUE(refused);
}

TEST(ServerTest, StopsAfterMaxSteps) {
  auto options = lockstep();
  options.max_steps = 4;
  std::vector<std::uint64_t> ticks;
  options.on_tick = [&](const SimSnapshot& s) { ticks.push_back(s.tick); };
  ServerFixture f(options);
  {
    testing::LineClient c(f.port());
    c.send(StepMsg{10});
    EXPECT_EQ(expect<SteppedMsg>(c).tick, 4u);
  }
  f.join();
  EXPECT_EQ(f.server().simulation().tick(), 4u);
  EXPECT_EQ(ticks, (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
}

TEST(ServerTest, DroppedClientDoesNotStopTheServer) {
  ServerFixture f(lockstep());
  {
    testing::LineClient gone(f.port());
    gone.send(SubscribeMsg{1, Topic::Scan});
    gone.send_line("{\"type\":\"st");
  }
  testing::LineClient c(f.port());
  c.send(StepMsg{1});
  EXPECT_EQ(expect<SteppedMsg>(c).tick, 1u);
}

}  // namespace
}  // namespace crowdsim
