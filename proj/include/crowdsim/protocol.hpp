#pragma once

// Newline-delimited JSON control protocol. Every message is one JSON object
// on one line with a "type" discriminator. encode() never emits the trailing
// newline; framing is the transport's job.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdsim/engine.hpp"
#include "crowdsim/error.hpp"

namespace crowdsim {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7171;

enum class Topic { Scan, State };

inline std::string_view to_string(Topic t) { return t == Topic::Scan ? "scan" : "state"; }

// Client to server.
struct HelloMsg {
  int version = kProtocolVersion;
  bool operator==(const HelloMsg&) const = default;
};
/// `robot_id` is required for scans; a state subscription covers every agent
/// and may omit it.
struct SubscribeMsg {
  std::optional<AgentId> robot_id;
  Topic topic = Topic::State;
  bool operator==(const SubscribeMsg&) const = default;
};
struct CmdVelMsg {
  AgentId robot_id = 0;
  double linear = 0.0;
  double angular = 0.0;
  bool operator==(const CmdVelMsg&) const = default;
};
struct StepMsg {
  std::uint64_t n = 1;
  bool operator==(const StepMsg&) const = default;
};
struct ByeMsg {
  bool operator==(const ByeMsg&) const = default;
};

// Server to client.
struct WelcomeMsg {
  int version = kProtocolVersion;
  std::string scenario;
  double dt = 0.0;
  std::vector<AgentId> robots;
  bool operator==(const WelcomeMsg&) const = default;
};
struct ScanMsg {
  LaserScan scan;
  bool operator==(const ScanMsg&) const = default;
};
struct StateMsg {
  SimSnapshot snapshot;
  bool operator==(const StateMsg&) const = default;
};
struct SteppedMsg {
  std::uint64_t tick = 0;
  bool operator==(const SteppedMsg&) const = default;
};
struct ErrorMsg {
  std::string code;
  std::string message;
  bool operator==(const ErrorMsg&) const = default;
};

using WireMessage = std::variant<HelloMsg, SubscribeMsg, CmdVelMsg, StepMsg, ByeMsg, WelcomeMsg, ScanMsg, StateMsg,
                                 SteppedMsg, ErrorMsg>;

namespace detail {

using wire_json = nlohmann::ordered_json;

inline const wire_json& field(const wire_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError("malformed", std::string("missing field '") + key + "'");
  return *it;
}

inline double wire_number(const wire_json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw ProtocolError("malformed", std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

template <typename Int>
Int wire_integer(const wire_json& v, const char* key) {
  if (!v.is_number_integer()) throw ProtocolError("malformed", std::string("field '") + key + "' must be an integer");
  const bool fits = v.is_number_unsigned()
                        ? v.get<std::uint64_t>() <= static_cast<std::uint64_t>(std::numeric_limits<Int>::max())
                        : v.get<std::int64_t>() >= static_cast<std::int64_t>(std::numeric_limits<Int>::min()) &&
                              (std::is_unsigned_v<Int> || v.get<std::int64_t>() <= static_cast<std::int64_t>(
                                                                                       std::numeric_limits<Int>::max()));
  if (!fits) throw ProtocolError("malformed", std::string("field '") + key + "' is out of range");
  return v.get<Int>();
}

template <typename Int>
Int integer_field(const wire_json& j, const char* key) {
  return wire_integer<Int>(field(j, key), key);
}

inline std::string wire_string(const wire_json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw ProtocolError("malformed", std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline wire_json pose_row(const AgentPose& a) {
  return wire_json::array(
      {a.id, to_string(a.kind), a.position.x, a.position.y, a.heading, a.velocity.x, a.velocity.y});
}

inline AgentPose parse_pose_row(const wire_json& row) {
  if (!row.is_array() || row.size() != 7) throw ProtocolError("malformed", "agent rows have 7 entries");
  AgentPose a;
  a.id = wire_integer<AgentId>(row[0], "agents[][0]");
  if (row[1] == "pedestrian") {
    a.kind = AgentKind::Pedestrian;
  } else if (row[1] == "robot") {
    a.kind = AgentKind::Robot;
  } else {
    throw ProtocolError("malformed", "agent kind must be \"pedestrian\" or \"robot\"");
  }
  double v[5];
  for (std::size_t k = 0; k < 5; ++k) {
    if (!row[k + 2].is_number()) throw ProtocolError("malformed", "agent pose entries must be numbers");
    v[k] = row[k + 2].get<double>();
  }
  a.position = {v[0], v[1]};
  a.heading = v[2];
  a.velocity = {v[3], v[4]};
  return a;
}

}  // namespace detail

inline std::string encode(const WireMessage& message) {
  using detail::wire_json;
  wire_json j;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          j = {{"type", "hello"}, {"version", m.version}};
        } else if constexpr (std::is_same_v<T, SubscribeMsg>) {
          j["type"] = "subscribe";
          if (m.robot_id) j["robot_id"] = *m.robot_id;
          j["topic"] = to_string(m.topic);
        } else if constexpr (std::is_same_v<T, CmdVelMsg>) {
          j = {{"type", "cmd_vel"}, {"robot_id", m.robot_id}, {"linear", m.linear}, {"angular", m.angular}};
        } else if constexpr (std::is_same_v<T, StepMsg>) {
          j = {{"type", "step"}, {"n", m.n}};
        } else if constexpr (std::is_same_v<T, ByeMsg>) {
          j = {{"type", "bye"}};
        } else if constexpr (std::is_same_v<T, WelcomeMsg>) {
          j = {{"type", "welcome"}, {"version", m.version}, {"scenario", m.scenario}, {"dt", m.dt}, {"robots", m.robots}};
        } else if constexpr (std::is_same_v<T, ScanMsg>) {
          const auto& s = m.scan;
          j = {{"type", "scan"},
               {"robot_id", s.robot_id},
               {"tick", s.tick},
               {"angle_min", s.angle_min},
               {"angle_increment", s.angle_increment},
               {"range_max", s.range_max},
               {"ranges", s.ranges}};
        } else if constexpr (std::is_same_v<T, StateMsg>) {
          j = {{"type", "state"}, {"tick", m.snapshot.tick}, {"t", m.snapshot.sim_time}};
          auto& rows = j["agents"] = wire_json::array();
          for (const auto& a : m.snapshot.agents) rows.push_back(detail::pose_row(a));
        } else if constexpr (std::is_same_v<T, SteppedMsg>) {
          j = {{"type", "stepped"}, {"tick", m.tick}};
        } else {
          j = {{"type", "error"}, {"code", m.code}, {"message", m.message}};
        }
      },
      message);
  // Invalid UTF-8 in free text is replaced rather than aborting the encode.
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

/// Decode one line (a trailing "\n" or "\r\n" is tolerated). Throws
/// ProtocolError with code "malformed" or "unknown_type".
inline WireMessage decode(std::string_view line) {
  using detail::wire_json;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) throw ProtocolError("malformed", "message spans several lines");
  wire_json j;
  try {
    j = wire_json::parse(line);
  } catch (const wire_json::parse_error& e) {
    throw ProtocolError("malformed", e.what());
  }
  if (!j.is_object()) throw ProtocolError("malformed", "message must be a JSON object");
  const std::string type = detail::wire_string(j, "type");

  if (type == "hello") return HelloMsg{detail::integer_field<int>(j, "version")};
  if (type == "subscribe") {
    SubscribeMsg m;
    const std::string topic = detail::wire_string(j, "topic");
    if (topic == "scan") {
      m.topic = Topic::Scan;
    } else if (topic == "state") {
      m.topic = Topic::State;
    } else {
      throw ProtocolError("malformed", "topic must be \"scan\" or \"state\"");
    }
    if (j.contains("robot_id")) m.robot_id = detail::integer_field<AgentId>(j, "robot_id");
    if (m.topic == Topic::Scan && !m.robot_id) throw ProtocolError("malformed", "scan subscriptions need robot_id");
    return m;
  }
  if (type == "cmd_vel") {
    return CmdVelMsg{detail::integer_field<AgentId>(j, "robot_id"), detail::wire_number(j, "linear"),
                     detail::wire_number(j, "angular")};
  }
  if (type == "step") {
    StepMsg m;
    if (j.contains("n")) m.n = detail::integer_field<std::uint64_t>(j, "n");
    if (m.n < 1) throw ProtocolError("malformed", "n must be >= 1");
    return m;
  }
  if (type == "bye") return ByeMsg{};
  if (type == "welcome") {
    WelcomeMsg m{detail::integer_field<int>(j, "version"), detail::wire_string(j, "scenario"),
                 detail::wire_number(j, "dt"), {}};
    const auto& robots = detail::field(j, "robots");
    if (!robots.is_array()) throw ProtocolError("malformed", "robots must be an array");
    for (const auto& r : robots) m.robots.push_back(detail::wire_integer<AgentId>(r, "robots[]"));
    return m;
  }
  if (type == "scan") {
    ScanMsg m;
    auto& s = m.scan;
    s.robot_id = detail::integer_field<AgentId>(j, "robot_id");
    s.tick = detail::integer_field<std::uint64_t>(j, "tick");
    s.angle_min = detail::wire_number(j, "angle_min");
    s.angle_increment = detail::wire_number(j, "angle_increment");
    s.range_max = detail::wire_number(j, "range_max");
    const auto& ranges = detail::field(j, "ranges");
    if (!ranges.is_array()) throw ProtocolError("malformed", "ranges must be an array");
    s.ranges.reserve(ranges.size());
    for (const auto& r : ranges) {
      if (!r.is_number()) throw ProtocolError("malformed", "ranges must be numbers");
      s.ranges.push_back(r.get<double>());
    }
    return m;
  }
  if (type == "state") {
    StateMsg m;
    m.snapshot.tick = detail::integer_field<std::uint64_t>(j, "tick");
    m.snapshot.sim_time = detail::wire_number(j, "t");
    const auto& rows = detail::field(j, "agents");
    if (!rows.is_array()) throw ProtocolError("malformed", "agents must be an array");
    for (const auto& row : rows) m.snapshot.agents.push_back(detail::parse_pose_row(row));
    return m;
  }
  if (type == "stepped") return SteppedMsg{detail::integer_field<std::uint64_t>(j, "tick")};
  if (type == "error") return ErrorMsg{detail::wire_string(j, "code"), detail::wire_string(j, "message")};
  throw ProtocolError("unknown_type", "unknown message type '" + type + "'");
}

}  // namespace crowdsim
