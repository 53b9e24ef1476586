#pragma once

// The decision cycle. Each step reads an immutable copy of the previous
// tick, then: applies robot commands, advances pedestrian goals, computes
// preferred velocities, runs avoidance, integrates, and optionally senses.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdsim/agent.hpp"
#include "crowdsim/avoidance.hpp"
#include "crowdsim/error.hpp"
#include "crowdsim/geometry.hpp"
#include "crowdsim/navigation.hpp"
#include "crowdsim/parallel.hpp"
#include "crowdsim/scenario.hpp"

namespace crowdsim {

/// Range value of a beam that hit nothing within max_range.
inline constexpr double kNoHit = -1.0;

struct LaserScan {
  AgentId robot_id = 0;
  std::uint64_t tick = 0;
  double angle_min = 0.0;
  double angle_increment = 0.0;
  double range_max = 0.0;
  std::vector<double> ranges;
  bool operator==(const LaserScan&) const = default;
};

struct AgentPose {
  AgentId id = 0;
  AgentKind kind = AgentKind::Pedestrian;
  Vec2 position;
  double heading = 0.0;
  Vec2 velocity;
  bool operator==(const AgentPose&) const = default;
};

struct SimSnapshot {
  std::uint64_t tick = 0;
  double sim_time = 0.0;
  std::vector<AgentPose> agents;
  bool operator==(const SimSnapshot&) const = default;
};

struct CycleStats {
  std::uint64_t tick = 0;
  double goal_ms = 0.0;
  double plan_ms = 0.0;
  double avoid_ms = 0.0;
  double integrate_ms = 0.0;
  double sense_ms = 0.0;
  double total_ms = 0.0;
};

/// A robot overlapping another agent or a wall after a step. `other` is the
/// other agent's id, or nullopt for a wall.
struct CollisionEvent {
  std::uint64_t tick = 0;
  AgentId robot_id = 0;
  std::optional<AgentId> other;
  bool operator==(const CollisionEvent&) const = default;
};

using CommandMap = std::map<AgentId, VelocityCommand>;

inline SocialForceParams social_force_params(const ParamMap& p) {
  SocialForceParams s;
  s.tau = p.at("tau");
  s.A = p.at("A");
  s.B = p.at("B");
  s.wall_A = p.at("wall_A");
  s.wall_B = p.at("wall_B");
  s.neighbor_dist = p.at("neighbor_dist");
  s.robot_scale = p.at("robot_scale");
  return s;
}

inline OrcaParams orca_params(const ParamMap& p) {
  OrcaParams o;
  o.time_horizon = p.at("time_horizon");
  o.time_horizon_obst = p.at("time_horizon_obst");
  o.neighbor_dist = p.at("neighbor_dist");
  o.max_neighbors = static_cast<std::size_t>(p.at("max_neighbors"));
  o.robot_responsibility = p.at("robot_responsibility");
  return o;
}

inline PotentialParams potential_params(const ParamMap& p) {
  return {p.at("k_att"), p.at("k_rep"), p.at("rho0")};
}

/// Beam origin and directions for one robot; shared by the scanner and by
/// anything that wants to re-cast the same rays.
struct BeamGeometry {
  Vec2 origin;
  double angle_min = 0.0;
  double angle_increment = 0.0;
  double heading = 0.0;

  Vec2 direction(std::size_t k) const {
    const double a = heading + angle_min + static_cast<double>(k) * angle_increment;
    return {std::cos(a), std::sin(a)};
  }
};

inline BeamGeometry beam_geometry(const AgentState& robot, const LaserConfig& config) {
  return {robot.position + rotate(config.mount_offset, robot.heading), -config.fov / 2.0,
          config.fov / static_cast<double>(config.beam_count - 1), robot.heading};
}

class Simulation {
 public:
  struct Options {
    /// Intra-cycle worker count; 0 reads CROWDSIM_THREADS.
    unsigned threads = 0;
  };

  explicit Simulation(ScenarioSpec spec) : Simulation(std::move(spec), Options{}) {}

  Simulation(ScenarioSpec spec, Options options)
      : spec_(std::move(spec)), threads_(options.threads ? options.threads : configured_threads()) {
    validate(spec_);
    std::vector<std::size_t> ordered(spec_.agents.size());
    std::iota(ordered.begin(), ordered.end(), 0);
    std::sort(ordered.begin(), ordered.end(),
              [&](std::size_t l, std::size_t r) { return spec_.agents[l].id < spec_.agents[r].id; });
    for (std::size_t k : ordered) {
      const AgentSpec* a = &spec_.agents[k];
      AgentState s;
      s.id = a->id;
      s.kind = a->kind;
      s.position = a->start;
      s.heading = a->heading;
      s.radius = a->radius;
      s.pref_speed = a->pref_speed;
      s.max_speed = a->max_speed;
      s.progress = {a->id, 0, a->kind == AgentKind::Pedestrian && a->targets.empty()};
      index_[a->id] = agents_.size();
      agents_.push_back(s);
      spec_index_.push_back(k);
      if (a->kind == AgentKind::Robot) held_[a->id] = VelocityCommand{};
    }
    nav_.resize(agents_.size());

    const auto& cfg = spec_.config;
    if (cfg.planner == PlannerKind::AStar) {
      const auto& p = cfg.planner_params;
      grid_.emplace(rasterize(spec_.obstacles, p.at("resolution"), p.at("inflation"), spec_.world_bounds));
      lookahead_ = p.at("lookahead");
      replan_distance_ = p.at("replan_cells") * p.at("resolution");
    } else {
      potential_ = potential_params(cfg.planner_params);
    }
    if (cfg.avoidance == AvoidanceKind::Orca) {
      orca_ = orca_params(cfg.avoidance_params);
    } else {
      social_ = social_force_params(cfg.avoidance_params);
    }
  }

  const ScenarioSpec& spec() const { return spec_; }
  std::uint64_t tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * spec_.config.dt; }
  unsigned threads() const { return threads_; }
  void set_threads(unsigned threads) { threads_ = threads ? threads : configured_threads(); }

  /// Agents in ascending id order.
  const std::vector<AgentState>& agents() const { return agents_; }
  const AgentState& agent(AgentId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownRobot("unknown agent " + std::to_string(id));
    return agents_[it->second];
  }
  std::vector<AgentId> robot_ids() const {
    std::vector<AgentId> ids;
    for (const auto& a : agents_) {
      if (a.is_robot()) ids.push_back(a.id);
    }
    return ids;
  }
  bool is_robot(AgentId id) const {
    auto it = index_.find(id);
    return it != index_.end() && agents_[it->second].is_robot();
  }

  const std::optional<OccupancyGrid>& planning_grid() const { return grid_; }
  const std::vector<CollisionEvent>& collisions() const { return collisions_; }
  /// Scans taken during the most recent sensing step, in robot id order.
  const std::vector<LaserScan>& latest_scans() const { return scans_; }

  struct StepOptions {
    /// Scan every robot whose publish slot falls on the new tick.
    bool sense = false;
  };

  CycleStats step(const CommandMap& commands = {}) { return step(commands, StepOptions{}); }

  CycleStats step(const CommandMap& commands, StepOptions options) {
    using Clock = std::chrono::steady_clock;
    auto ms = [](Clock::time_point a, Clock::time_point b) {
      return std::chrono::duration<double, std::milli>(b - a).count();
    };
    for (const auto& [id, _] : commands) {
      if (!is_robot(id)) throw UnknownRobot("no robot with id " + std::to_string(id));
    }
    const auto t0 = Clock::now();
    const double dt = spec_.config.dt;

    // (1) Commands: newest wins, otherwise hold the previous one.
    std::vector<AgentState> view = agents_;
    for (auto& a : view) {
      if (!a.is_robot()) continue;
      if (auto it = commands.find(a.id); it != commands.end()) {
        held_[a.id] = it->second;
        held_[a.id].issued_tick = tick_;
      }
      const auto& cmd = held_[a.id];
      const double linear = std::clamp(cmd.linear, -a.max_speed, a.max_speed);
      a.velocity = Vec2{std::cos(a.heading), std::sin(a.heading)} * linear;
    }

    // (2) Goals.
    for (std::size_t i = 0; i < view.size(); ++i) {
      auto& a = view[i];
      if (a.is_robot()) continue;
      a.progress = advance_goal(a.progress, a.position, agent_spec(i).targets, agent_spec(i).cycle_targets);
    }
    const auto t1 = Clock::now();

    // (3) Preferred velocities.
    std::vector<Vec2> preferred(view.size());
    parallel_for(view.size(), threads_, [&](std::size_t i) {
      if (!view[i].is_robot()) preferred[i] = preferred_velocity(i, view[i]);
    });
    const auto t2 = Clock::now();

    // (4) Avoidance, against the pre-step snapshot; robots keep their velocity.
    std::vector<Vec2> next_velocity(view.size());
    parallel_for(view.size(), threads_, [&](std::size_t i) {
      next_velocity[i] = view[i].is_robot() ? view[i].velocity : avoid(i, view, preferred[i]);
    });
    const auto t3 = Clock::now();

    // (5) Integration.
    for (std::size_t i = 0; i < view.size(); ++i) {
      auto& a = view[i];
      if (a.is_robot()) {
        const double linear = dot(a.velocity, Vec2{std::cos(a.heading), std::sin(a.heading)});
        a.position += Vec2{std::cos(a.heading), std::sin(a.heading)} * (linear * dt);
        a.heading = wrap_angle(a.heading + held_[a.id].angular * dt);
      } else {
        a.velocity = next_velocity[i];
        a.position += a.velocity * dt;
        if (a.velocity.squared_norm() > 1e-18) a.heading = std::atan2(a.velocity.y, a.velocity.x);
      }
    }
    agents_ = std::move(view);
    ++tick_;
    record_collisions();
    const auto t4 = Clock::now();

    scans_.clear();
    if (options.sense) {
      const int divisor = spec_.config.laser.rate_divisor;
      if (tick_ % static_cast<std::uint64_t>(divisor) == 0) {
        for (const auto& a : agents_) {
          if (a.is_robot()) scans_.push_back(simulate_scan(a.id, spec_.config.laser));
        }
      }
    }
    const auto t5 = Clock::now();

    return {tick_, ms(t0, t1), ms(t1, t2), ms(t2, t3), ms(t3, t4), ms(t4, t5), ms(t0, t5)};
  }

  LaserScan simulate_scan(AgentId robot_id) const { return simulate_scan(robot_id, spec_.config.laser); }

  /// One noise-free sweep: walls plus every other agent as a disc.
  LaserScan simulate_scan(AgentId robot_id, const LaserConfig& config) const {
    auto it = index_.find(robot_id);
    if (it == index_.end()) throw UnknownRobot("no robot with id " + std::to_string(robot_id));
    const AgentState& robot = agents_[it->second];
    if (!robot.is_robot()) throw NotARobot("agent " + std::to_string(robot_id) + " is a pedestrian");

    std::vector<Disc> discs;
    discs.reserve(agents_.size());
    for (const auto& a : agents_) {
      if (a.id != robot_id) discs.push_back({a.position, a.radius});
    }
    const BeamGeometry beams = beam_geometry(robot, config);
    LaserScan scan{robot_id, tick_, beams.angle_min, beams.angle_increment, config.max_range,
                   std::vector<double>(static_cast<std::size_t>(config.beam_count), kNoHit)};
    parallel_for(scan.ranges.size(), threads_, [&](std::size_t k) {
      if (auto hit = ray_cast(beams.origin, beams.direction(k), config.max_range, spec_.obstacles, discs)) {
        scan.ranges[k] = *hit;
      }
    });
    return scan;
  }

  SimSnapshot snapshot() const {
    SimSnapshot s{tick_, time(), {}};
    s.agents.reserve(agents_.size());
    for (const auto& a : agents_) s.agents.push_back({a.id, a.kind, a.position, a.heading, a.velocity});
    return s;
  }

 private:
  const AgentSpec& agent_spec(std::size_t i) const { return spec_.agents[spec_index_[i]]; }

  struct NavState {
    std::optional<Path> path;
    std::size_t target_index = 0;
  };

  Vec2 preferred_velocity(std::size_t i, const AgentState& a) {
    const AgentSpec& spec = agent_spec(i);
    if (a.progress.done || spec.targets.empty()) return {};
    const GoalSpec& goal = spec.targets[a.progress.index];
    const Vec2 target = goal_position(goal);
    const double tolerance = std::holds_alternative<PointGoal>(goal) ? std::get<PointGoal>(goal).tolerance : 0.0;

    if (!grid_) return potential_field_velocity(a.position, target, spec_.obstacles, potential_, a.pref_speed);

    NavState& nav = nav_[i];
    const bool stale = !nav.path || nav.target_index != a.progress.index ||
                       (nav.path->waypoints[nearest_waypoint(*nav.path, a.position)] - a.position).norm() >
                           replan_distance_;
    if (stale) {
      nav.path = plan(a.position, target);
      nav.target_index = a.progress.index;
    }
    Path steer = *nav.path;
    steer.waypoints.back() = target;
    return preferred_velocity_astar(a.position, steer, a.pref_speed, lookahead_, tolerance);
  }

  // Endpoints that fall in inflated cells are moved to the nearest free cell;
  // an unreachable goal degrades to a straight line.
  Path plan(const Vec2& from, const Vec2& to) const {
    const auto& grid = *grid_;
    const auto start = nearest_free_cell(grid, grid.cell_of(from));
    const auto goal = nearest_free_cell(grid, grid.cell_of(to));
    if (start && goal) {
      try {
        return astar_plan(grid, grid.center_of(*start), grid.center_of(*goal));
      } catch (const NoPath&) {
      }
    }
    return Path{{from, to}, (to - from).norm()};
  }

  Vec2 avoid(std::size_t i, const std::vector<AgentState>& view, const Vec2& v_pref) const {
    const AgentState& self = view[i];
    const double range = orca_ ? orca_->neighbor_dist : social_.neighbor_dist;
    const double range2 = range * range;
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < view.size(); ++j) {
      if (j == i) continue;
      const double d2 = (view[j].position - self.position).squared_norm();
      if (d2 <= range2) near.emplace_back(d2, j);
    }
    if (orca_ && near.size() > orca_->max_neighbors) {
      // Ties in distance resolve by id, which matches index order here.
      const auto keep = near.begin() + static_cast<std::ptrdiff_t>(orca_->max_neighbors);
      std::nth_element(near.begin(), keep, near.end());
      near.erase(keep, near.end());
    }
    std::sort(near.begin(), near.end(), [](const auto& l, const auto& r) { return l.second < r.second; });
    std::vector<AgentState> neighbors;
    neighbors.reserve(near.size());
    for (const auto& [_, j] : near) neighbors.push_back(view[j]);

    if (orca_) {
      auto lines = orca_obstacle_lines(self, spec_.obstacles, *orca_);
      const std::size_t hard = lines.size();
      const auto agent_lines = orca_agent_lines(self, neighbors, *orca_, spec_.config.dt);
      lines.insert(lines.end(), agent_lines.begin(), agent_lines.end());
      return orca_solve(lines, v_pref, self.max_speed, hard);
    }
    return social_force_velocity(self, v_pref, neighbors, spec_.obstacles, social_, spec_.config.dt);
  }

  void record_collisions() {
    for (const auto& r : agents_) {
      if (!r.is_robot()) continue;
      for (const auto& o : agents_) {
        if (o.id == r.id) continue;
        if ((o.position - r.position).norm() < r.radius + o.radius) collisions_.push_back({tick_, r.id, o.id});
      }
      if (spec_.obstacles.clearance(r.position) < r.radius) collisions_.push_back({tick_, r.id, std::nullopt});
    }
  }

  ScenarioSpec spec_;
  unsigned threads_;
  std::vector<AgentState> agents_;
  std::vector<std::size_t> spec_index_;
  std::map<AgentId, std::size_t> index_;
  std::map<AgentId, VelocityCommand> held_;
  std::vector<NavState> nav_;
  std::optional<OccupancyGrid> grid_;
  double lookahead_ = 1.0;
  double replan_distance_ = 0.5;
  PotentialParams potential_;
  std::optional<OrcaParams> orca_;
  SocialForceParams social_;
  std::uint64_t tick_ = 0;
  std::vector<CollisionEvent> collisions_;
  std::vector<LaserScan> scans_;
};

/// One trajectory-log line: {"tick":n,"t":s,"agents":[[id,kind,x,y,theta,vx,vy],...]}.
inline std::string trajectory_line(const SimSnapshot& s) {
  nlohmann::ordered_json j;
  j["tick"] = s.tick;
  j["t"] = s.sim_time;
  auto& agents = j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : s.agents) {
    agents.push_back({a.id, to_string(a.kind), a.position.x, a.position.y, a.heading, a.velocity.x, a.velocity.y});
  }
  return j.dump();
}

}  // namespace crowdsim
