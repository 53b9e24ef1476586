#include "crowdsim/protocol.hpp"

#include <random>

#include "gtest/gtest.h"
#include "test_support.hpp"

namespace crowdsim {
namespace {

std::vector<std::string> golden_lines() {
  std::istringstream in(testing::read_file(CROWDSIM_FIXTURE_DIR "/wire_golden.ndjson"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

TEST(ProtocolTest, GoldenLinesAreCanonical) {
  const auto lines = golden_lines();
  ASSERT_EQ(lines.size(), 13u);
  for (const auto& line : lines) EXPECT_EQ(encode(decode(line)), line);
}

TEST(ProtocolTest, GoldenLinesCoverEveryType) {
  std::set<std::size_t> seen;
  for (const auto& line : golden_lines()) seen.insert(decode(line).index());
  EXPECT_EQ(seen.size(), std::variant_size_v<WireMessage>);
}

TEST(ProtocolTest, DecodesFields) {
  const auto m = decode(R"({"type":"cmd_vel","robot_id":3,"linear":1,"angular":-0.5})");
  EXPECT_EQ(std::get<CmdVelMsg>(m), (CmdVelMsg{3, 1.0, -0.5}));
  EXPECT_EQ(std::get<StepMsg>(decode(R"({"type":"step"})")).n, 1u);
  EXPECT_EQ(std::get<SubscribeMsg>(decode(R"({"topic":"scan","type":"subscribe","robot_id":2})")),
            (SubscribeMsg{2, Topic::Scan}));
  EXPECT_EQ(std::get<HelloMsg>(decode("{\"type\":\"hello\",\"version\":1}\r\n")).version, 1);
}

TEST(ProtocolTest, NoHitIsMinusOne) {
  ScanMsg m;
  m.scan.ranges = {kNoHit, 3.5};
  const std::string line = encode(m);
  EXPECT_NE(line.find("\"ranges\":[-1.0,3.5]"), std::string::npos) << line;
}

TEST(ProtocolTest, EncodedMessagesAreSingleLines) {
  ErrorMsg m{"malformed", "bad\nline \"quoted\""};
  const std::string line = encode(m);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(std::get<ErrorMsg>(decode(line)), m);
}

std::string code_of(std::string_view line) {
  try {
    decode(line);
  } catch (const ProtocolError& e) {
    return e.code();
  }
  return "<decoded>";
}

TEST(ProtocolTest, RejectsMalformedInput) {
  EXPECT_EQ(code_of("not json"), "malformed");
  EXPECT_EQ(code_of("[1,2]"), "malformed");
  EXPECT_EQ(code_of(R"({"version":1})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":7})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"teleport"})"), "unknown_type");
  EXPECT_EQ(code_of(R"({"type":"cmd_vel","robot_id":1,"linear":"fast","angular":0})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"cmd_vel","robot_id":1.5,"linear":1,"angular":0})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"cmd_vel","linear":1,"angular":0})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"step","n":0})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"step","n":-2})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"subscribe","topic":"odom","robot_id":1})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"subscribe","topic":"scan"})"), "malformed");
  EXPECT_EQ(code_of(R"({"type":"hello","version":99999999999})"), "malformed");
  EXPECT_EQ(code_of("{\"type\":\"bye\"}\n{\"type\":\"bye\"}"), "malformed");
}

WireMessage random_message(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> real(-1e3, 1e3);
  std::uniform_int_distribution<AgentId> id(0, 1'000'000'000'000LL);
  std::uniform_int_distribution<int> small(0, 30);
  auto text = [&] {
    std::string s;
    const int n = small(rng);
    for (int i = 0; i < n; ++i) s.push_back(" aZ\"\\\n\t{}:,\x7f"[rng() % 14]);
    return s + "\xc3\xa9";
  };
  switch (rng() % 10) {
    case 0:
      return HelloMsg{small(rng)};
    case 1:
      return SubscribeMsg{rng() % 2 ? std::optional<AgentId>(id(rng)) : std::nullopt, Topic::State};
    case 2:
      return SubscribeMsg{id(rng), Topic::Scan};
    case 3:
      return CmdVelMsg{id(rng), real(rng), real(rng)};
    case 4:
      return StepMsg{1 + rng() % 1000};
    case 5:
      return ByeMsg{};
    case 6: {
      WelcomeMsg m{small(rng), text(), real(rng), {}};
      for (int i = small(rng); i > 0; --i) m.robots.push_back(id(rng));
      return m;
    }
    case 7: {
      ScanMsg m;
      m.scan = {id(rng), rng(), real(rng), real(rng), real(rng), {}};
      for (int i = small(rng) * 20; i > 0; --i) m.scan.ranges.push_back(rng() % 4 ? std::abs(real(rng)) : kNoHit);
      return m;
    }
    case 8: {
      StateMsg m;
      m.snapshot.tick = rng();
      m.snapshot.sim_time = std::abs(real(rng));
      for (int i = small(rng); i > 0; --i) {
        m.snapshot.agents.push_back({id(rng), rng() % 2 ? AgentKind::Robot : AgentKind::Pedestrian,
                                     {real(rng), real(rng)}, real(rng), {real(rng), real(rng)}});
      }
      return m;
    }
    default:
      return rng() % 2 ? WireMessage{SteppedMsg{rng()}} : WireMessage{ErrorMsg{text(), text()}};
  }
}

TEST(ProtocolTest, RandomRoundTrip) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const WireMessage m = random_message(rng);
    const std::string line = encode(m);
    ASSERT_EQ(line.find('\n'), std::string::npos);
    const WireMessage back = decode(line);
    ASSERT_EQ(back, m) << line;
    ASSERT_EQ(encode(back), line);
  }
}

}  // namespace
}  // namespace crowdsim
