#pragma once

#include <cstdint>

#include "crowdsim/geometry.hpp"
#include "crowdsim/navigation.hpp"
#include "crowdsim/scenario.hpp"

namespace crowdsim {

/// Kinematic state of one agent at a tick.
struct AgentState {
  AgentId id = 0;
  AgentKind kind = AgentKind::Pedestrian;
  Vec2 position;
  double heading = 0.0;
  Vec2 velocity;
  double radius = 0.2;
  double pref_speed = 1.3;
  double max_speed = 2.0;
  TargetProgress progress;

  bool is_robot() const { return kind == AgentKind::Robot; }
  bool operator==(const AgentState&) const = default;
};

/// Linear/angular velocity command for a robot, in the robot frame.
struct VelocityCommand {
  double linear = 0.0;
  double angular = 0.0;
  std::uint64_t issued_tick = 0;
  bool operator==(const VelocityCommand&) const = default;
};

}  // namespace crowdsim
