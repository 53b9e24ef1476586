#pragma once

// Command traces: the velocity commands a run consumed, one NDJSON line per
// (tick, robot). Replaying a trace against the same scenario reproduces the
// run's trajectory log byte for byte.

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdsim/engine.hpp"
#include "crowdsim/error.hpp"

namespace crowdsim {

struct TraceEntry {
  /// Engine tick before the step that applied the command.
  std::uint64_t tick = 0;
  AgentId robot_id = 0;
  double linear = 0.0;
  double angular = 0.0;
  bool operator==(const TraceEntry&) const = default;
};

using CommandTrace = std::vector<TraceEntry>;

inline std::string trace_line(const TraceEntry& e) {
  nlohmann::ordered_json j;
  j["tick"] = e.tick;
  j["robot_id"] = e.robot_id;
  j["linear"] = e.linear;
  j["angular"] = e.angular;
  return j.dump();
}

inline void append_trace(CommandTrace& trace, std::uint64_t tick, const CommandMap& commands) {
  for (const auto& [id, c] : commands) trace.push_back({tick, id, c.linear, c.angular});
}

/// Reads a trace; blank lines are skipped. Entries must be in tick order.
inline CommandTrace read_trace(std::istream& in) {
  CommandTrace trace;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceEntry e{j.at("tick").get<std::uint64_t>(), j.at("robot_id").get<AgentId>(), j.at("linear").get<double>(),
                   j.at("angular").get<double>()};
      if (!trace.empty() && e.tick < trace.back().tick) throw Error("ticks go backwards");
      trace.push_back(e);
    } catch (const std::exception& e) {
      throw Error("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return trace;
}

/// Runs `steps` ticks feeding commands from `trace`; returns the trajectory
/// log including the initial tick-0 line.
inline std::vector<std::string> replay(const ScenarioSpec& spec, const CommandTrace& trace, std::uint64_t steps,
                                       unsigned threads = 0) {
  Simulation sim(spec, {threads});
  std::vector<std::string> log{trajectory_line(sim.snapshot())};
  auto next = trace.begin();
  for (std::uint64_t k = 0; k < steps; ++k) {
    CommandMap commands;
    for (; next != trace.end() && next->tick <= sim.tick(); ++next) {
      if (next->tick == sim.tick()) commands[next->robot_id] = {next->linear, next->angular, next->tick};
    }
    sim.step(commands, {.sense = true});
    log.push_back(trajectory_line(sim.snapshot()));
  }
  return log;
}

}  // namespace crowdsim
