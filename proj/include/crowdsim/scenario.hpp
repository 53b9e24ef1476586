#pragma once

// Scenario documents: a single JSON object with keys
// `name, bounds, obstacles, agents, config`. Parsing validates every
// invariant and fills defaults, so a parsed spec serializes back to a
// complete canonical document.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdsim/error.hpp"
#include "crowdsim/geometry.hpp"

namespace crowdsim {

using AgentId = std::int64_t;

enum class AgentKind { Pedestrian, Robot };

inline std::string_view to_string(AgentKind k) {
  return k == AgentKind::Pedestrian ? "pedestrian" : "robot";
}

struct PointGoal {
  Vec2 position;
  double tolerance = 0.2;
  bool operator==(const PointGoal&) const = default;
};

/// Axis-aligned rectangle given by center and half extents.
struct RegionGoal {
  Vec2 center;
  Vec2 half_extents;
  bool operator==(const RegionGoal&) const = default;
};

using GoalSpec = std::variant<PointGoal, RegionGoal>;

inline Vec2 goal_position(const GoalSpec& g) {
  return std::visit(
      [](const auto& goal) {
        if constexpr (std::is_same_v<std::decay_t<decltype(goal)>, PointGoal>) {
          return goal.position;
        } else {
          return goal.center;
        }
      },
      g);
}

inline bool goal_contains(const GoalSpec& g, const Vec2& p) {
  if (const auto* pt = std::get_if<PointGoal>(&g)) {
    return (p - pt->position).norm() <= pt->tolerance;
  }
  const auto& r = std::get<RegionGoal>(g);
  return std::abs(p.x - r.center.x) <= r.half_extents.x &&
         std::abs(p.y - r.center.y) <= r.half_extents.y;
}

struct AgentSpec {
  AgentId id = 0;
  AgentKind kind = AgentKind::Pedestrian;
  Vec2 start;
  double heading = 0.0;
  double radius = 0.2;
  double pref_speed = 1.3;
  double max_speed = 2.0;
  std::vector<GoalSpec> targets;
  bool cycle_targets = false;
  bool operator==(const AgentSpec&) const = default;
};

enum class PlannerKind { AStar, PotentialField };
enum class AvoidanceKind { SocialForce, Orca };

inline std::string_view to_string(PlannerKind p) {
  return p == PlannerKind::AStar ? "astar" : "potential_field";
}
inline std::string_view to_string(AvoidanceKind a) {
  return a == AvoidanceKind::Orca ? "orca" : "social_force";
}

struct LaserConfig {
  double fov = 220.0 * M_PI / 180.0;
  double max_range = 25.0;
  int beam_count = 440;
  int rate_divisor = 1;
  Vec2 mount_offset;
  bool operator==(const LaserConfig&) const = default;
};

using ParamMap = std::map<std::string, double>;

struct SimConfig {
  double dt = 0.1;
  PlannerKind planner = PlannerKind::AStar;
  AvoidanceKind avoidance = AvoidanceKind::Orca;
  ParamMap planner_params;
  ParamMap avoidance_params;
  LaserConfig laser;
  std::uint64_t seed = 0;
  bool operator==(const SimConfig&) const = default;
};

struct ScenarioSpec {
  std::string name = "scenario";
  ObstacleSet obstacles;
  Rect world_bounds;
  std::vector<AgentSpec> agents;
  SimConfig config;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Default parameter values per planner/avoidance choice. Keys absent from
/// this table are rejected. `inflation` has no fixed default: it resolves to
/// the largest pedestrian radius.
inline const ParamMap& planner_defaults(PlannerKind p) {
  static const ParamMap astar{
      {"resolution", 0.25}, {"lookahead", 1.0}, {"replan_cells", 2.0}};
  static const ParamMap field{{"k_att", 1.0}, {"k_rep", 0.5}, {"rho0", 2.0}};
  return p == PlannerKind::AStar ? astar : field;
}

inline const ParamMap& avoidance_defaults(AvoidanceKind a) {
  static const ParamMap orca{{"time_horizon", 2.0},   {"time_horizon_obst", 1.0},
                             {"neighbor_dist", 10.0}, {"max_neighbors", 10.0},
                             {"robot_responsibility", 1.0}};
  static const ParamMap social{{"tau", 0.5},    {"A", 2.0},         {"B", 0.08},
                               {"wall_A", 4.0}, {"wall_B", 0.06},   {"neighbor_dist", 5.0},
                               {"robot_scale", 1.0}};
  return a == AvoidanceKind::Orca ? orca : social;
}

namespace detail {

using nlohmann::json;

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
  return v;
}

inline double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

inline void only_keys(const json& obj, std::initializer_list<std::string_view> keys,
                      const std::string& path) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ValidationError(path.empty() ? k : path + "." + k, "unknown key");
    }
  }
}

inline const json& object_at(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  return j;
}

inline GoalSpec parse_goal(const json& j, const std::string& path) {
  object_at(j, path);
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ValidationError(path + ".type", "missing goal type");
  if (*type == "point") {
    only_keys(j, {"type", "x", "y", "tol"}, path);
    if (!j.contains("x") || !j.contains("y")) throw ValidationError(path, "point goal needs x and y");
    PointGoal g{{number(j["x"], path + ".x"), number(j["y"], path + ".y")},
                number_or(j, "tol", 0.2, path)};
    if (!(g.tolerance > 0.0)) throw ValidationError(path + ".tol", "must be positive");
    return g;
  }
  if (*type == "region") {
    only_keys(j, {"type", "x", "y", "hx", "hy"}, path);
    for (const char* k : {"x", "y", "hx", "hy"}) {
      if (!j.contains(k)) throw ValidationError(path + "." + k, "missing");
    }
    RegionGoal g{{number(j["x"], path + ".x"), number(j["y"], path + ".y")},
                 {number(j["hx"], path + ".hx"), number(j["hy"], path + ".hy")}};
    if (!(g.half_extents.x > 0.0)) throw ValidationError(path + ".hx", "must be positive");
    if (!(g.half_extents.y > 0.0)) throw ValidationError(path + ".hy", "must be positive");
    return g;
  }
  throw ValidationError(path + ".type", "unknown goal type");
}

inline AgentSpec parse_agent(const json& j, const std::string& path) {
  object_at(j, path);
  only_keys(j, {"id", "kind", "x", "y", "heading", "radius", "pref_speed", "max_speed", "targets",
                "cycle"},
            path);
  AgentSpec a;
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer()) throw ValidationError(path + ".id", "expected an integer");
  a.id = id->get<AgentId>();
  if (a.id < 0) throw ValidationError(path + ".id", "must be non-negative");

  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw ValidationError(path + ".kind", "missing kind");
  if (*kind == "pedestrian") {
    a.kind = AgentKind::Pedestrian;
  } else if (*kind == "robot") {
    a.kind = AgentKind::Robot;
  } else {
    throw ValidationError(path + ".kind", "must be \"pedestrian\" or \"robot\"");
  }
  const bool robot = a.kind == AgentKind::Robot;

  if (!j.contains("x") || !j.contains("y")) throw ValidationError(path, "agent needs x and y");
  a.start = {number(j["x"], path + ".x"), number(j["y"], path + ".y")};
  a.heading = number_or(j, "heading", 0.0, path);
  a.radius = number_or(j, "radius", robot ? 0.3 : 0.2, path);
  a.pref_speed = number_or(j, "pref_speed", robot ? 0.0 : 1.3, path);
  a.max_speed = number_or(j, "max_speed", std::max(robot ? 1.0 : 2.0, a.pref_speed), path);
  if (!(a.radius > 0.0)) throw ValidationError(path + ".radius", "must be positive");
  if (!(a.pref_speed >= 0.0)) throw ValidationError(path + ".pref_speed", "must be non-negative");
  if (!(a.max_speed >= a.pref_speed)) throw ValidationError(path + ".max_speed", "must be >= pref_speed");

  if (auto cyc = j.find("cycle"); cyc != j.end()) {
    if (!cyc->is_boolean()) throw ValidationError(path + ".cycle", "expected a boolean");
    a.cycle_targets = cyc->get<bool>();
  }
  if (auto t = j.find("targets"); t != j.end()) {
    if (!t->is_array()) throw ValidationError(path + ".targets", "expected an array");
    for (std::size_t i = 0; i < t->size(); ++i) {
      a.targets.push_back(parse_goal((*t)[i], path + ".targets[" + std::to_string(i) + "]"));
    }
  }
  if (robot) {
    a.targets.clear();
    a.cycle_targets = false;
  }
  return a;
}

inline ParamMap parse_params(const json* j, const ParamMap& defaults, const std::string& path) {
  ParamMap out = defaults;
  if (!j) return out;
  object_at(*j, path);
  for (const auto& [k, v] : j->items()) {
    if (!defaults.contains(k) && k != "inflation") throw ValidationError(path + "." + k, "unknown parameter");
    out[k] = number(v, path + "." + k);
  }
  return out;
}

inline void check_params(const ParamMap& p, const std::string& path) {
  for (const auto& [k, v] : p) {
    if (k == "inflation") {
      if (!(v >= 0.0)) throw ValidationError(path + "." + k, "must be non-negative");
    } else if (!(v > 0.0)) {
      throw ValidationError(path + "." + k, "must be positive");
    }
  }
  if (auto it = p.find("max_neighbors"); it != p.end() && (it->second < 1.0 || it->second != std::floor(it->second))) {
    throw ValidationError(path + ".max_neighbors", "must be an integer >= 1");
  }
}

inline LaserConfig parse_laser(const json& j, const std::string& path) {
  object_at(j, path);
  only_keys(j, {"fov", "max_range", "beam_count", "rate_divisor", "mount_offset"}, path);
  LaserConfig l;
  l.fov = number_or(j, "fov", l.fov, path);
  l.max_range = number_or(j, "max_range", l.max_range, path);
  auto integer = [&](const char* key, int fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) throw ValidationError(path + "." + key, "expected an integer");
    return it->get<int>();
  };
  l.beam_count = integer("beam_count", l.beam_count);
  l.rate_divisor = integer("rate_divisor", l.rate_divisor);
  if (auto m = j.find("mount_offset"); m != j.end()) {
    if (!m->is_array() || m->size() != 2) throw ValidationError(path + ".mount_offset", "expected [x, y]");
    l.mount_offset = {number((*m)[0], path + ".mount_offset"), number((*m)[1], path + ".mount_offset")};
  }
  if (!(l.fov > 0.0 && l.fov <= 2.0 * M_PI)) throw ValidationError(path + ".fov", "must be in (0, 2*pi]");
  if (!(l.max_range > 0.0)) throw ValidationError(path + ".max_range", "must be positive");
  if (l.beam_count < 2) throw ValidationError(path + ".beam_count", "must be >= 2");
  if (l.rate_divisor < 1) throw ValidationError(path + ".rate_divisor", "must be >= 1");
  return l;
}

inline SimConfig parse_config(const json* j, double max_ped_radius) {
  SimConfig c;
  const json empty = json::object();
  const json& cfg = j ? object_at(*j, "config") : empty;
  only_keys(cfg, {"dt", "planner", "avoidance", "planner_params", "avoidance_params", "seed", "laser"},
            "config");
  c.dt = number_or(cfg, "dt", 0.1, "config");
  if (!(c.dt > 0.0 && c.dt <= 1.0)) throw ValidationError("config.dt", "must be in (0, 1]");

  if (auto p = cfg.find("planner"); p != cfg.end()) {
    if (*p == "astar") {
      c.planner = PlannerKind::AStar;
    } else if (*p == "potential_field") {
      c.planner = PlannerKind::PotentialField;
    } else {
      throw ValidationError("config.planner", "unknown planner");
    }
  }
  if (auto a = cfg.find("avoidance"); a != cfg.end()) {
    if (*a == "orca") {
      c.avoidance = AvoidanceKind::Orca;
    } else if (*a == "social_force") {
      c.avoidance = AvoidanceKind::SocialForce;
    } else {
      throw ValidationError("config.avoidance", "unknown avoidance model");
    }
  }
  auto find = [&](const char* key) -> const json* {
    auto it = cfg.find(key);
    return it == cfg.end() ? nullptr : &*it;
  };
  c.planner_params = parse_params(find("planner_params"), planner_defaults(c.planner), "config.planner_params");
  if (c.planner != PlannerKind::AStar && c.planner_params.contains("inflation")) {
    throw ValidationError("config.planner_params.inflation", "unknown parameter");
  }
  if (c.planner == PlannerKind::AStar && !c.planner_params.contains("inflation")) {
    c.planner_params["inflation"] = max_ped_radius;
  }
  c.avoidance_params = parse_params(find("avoidance_params"), avoidance_defaults(c.avoidance),
                                    "config.avoidance_params");
  if (c.avoidance_params.contains("inflation")) {
    throw ValidationError("config.avoidance_params.inflation", "unknown parameter");
  }
  check_params(c.planner_params, "config.planner_params");
  check_params(c.avoidance_params, "config.avoidance_params");

  if (auto s = cfg.find("seed"); s != cfg.end()) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0)) {
      throw ValidationError("config.seed", "expected a non-negative integer");
    }
    c.seed = s->get<std::uint64_t>();
  }
  if (const json* l = find("laser")) c.laser = parse_laser(*l, "config.laser");
  return c;
}

}  // namespace detail

/// Check every cross-field invariant of a spec; throws ValidationError.
inline void validate(const ScenarioSpec& spec) {
  if (spec.world_bounds.degenerate()) throw ValidationError("bounds", "must have positive extent");
  std::set<AgentId> ids;
  for (std::size_t i = 0; i < spec.agents.size(); ++i) {
    const auto& a = spec.agents[i];
    const std::string path = "agents[" + std::to_string(i) + "]";
    if (!ids.insert(a.id).second) throw ValidationError(path + ".id", "duplicate id " + std::to_string(a.id));
    if (!spec.world_bounds.contains(a.start)) throw ValidationError(path + ".x", "start outside bounds");
    if (spec.obstacles.clearance(a.start) < a.radius - 1e-9) {
      throw ValidationError(path + ".x", "start inside an obstacle");
    }
  }
  // Sweep over x so large crowds validate quickly.
  std::vector<std::size_t> order(spec.agents.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return spec.agents[l].start.x < spec.agents[r].start.x; });
  double max_radius = 0.0;
  for (const auto& a : spec.agents) max_radius = std::max(max_radius, a.radius);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& a = spec.agents[order[i]];
    for (std::size_t k = i + 1; k < order.size(); ++k) {
      const auto& b = spec.agents[order[k]];
      if (b.start.x - a.start.x > a.radius + max_radius) break;
      if ((a.start - b.start).norm() < a.radius + b.radius - 1e-9) {
        throw ValidationError("agents[" + std::to_string(std::max(order[i], order[k])) + "]",
                              "overlaps agent " + std::to_string(a.id == b.id ? a.id : std::min(a.id, b.id)));
      }
    }
  }
}

/// Parse and validate a scenario document, filling defaults.
inline ScenarioSpec parse_scenario(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  if (!doc.is_object()) throw ValidationError("", "document must be a JSON object");
  detail::only_keys(doc, {"name", "bounds", "obstacles", "agents", "config"}, "");

  ScenarioSpec spec;
  if (auto n = doc.find("name"); n != doc.end()) {
    if (!n->is_string()) throw ValidationError("name", "expected a string");
    spec.name = n->get<std::string>();
  }

  std::vector<Segment> segments;
  if (auto obs = doc.find("obstacles"); obs != doc.end()) {
    if (!obs->is_array()) throw ValidationError("obstacles", "expected an array");
    for (std::size_t i = 0; i < obs->size(); ++i) {
      const auto& q = (*obs)[i];
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      if (!q.is_array() || q.size() != 4) throw ValidationError(path, "expected [x1, y1, x2, y2]");
      Segment s{{detail::number(q[0], path), detail::number(q[1], path)},
                {detail::number(q[2], path), detail::number(q[3], path)}};
      if (s.a == s.b) throw ValidationError(path, "zero-length segment");
      segments.push_back(s);
    }
  }
  spec.obstacles = ObstacleSet(std::move(segments));

  auto agents = doc.find("agents");
  if (agents == doc.end()) throw ValidationError("agents", "missing agents section");
  if (!agents->is_array()) throw ValidationError("agents", "expected an array");
  double max_ped_radius = 0.0;
  for (std::size_t i = 0; i < agents->size(); ++i) {
    spec.agents.push_back(detail::parse_agent((*agents)[i], "agents[" + std::to_string(i) + "]"));
    if (spec.agents.back().kind == AgentKind::Pedestrian) {
      max_ped_radius = std::max(max_ped_radius, spec.agents.back().radius);
    }
  }

  if (auto b = doc.find("bounds"); b != doc.end()) {
    if (!b->is_array() || b->size() != 4) throw ValidationError("bounds", "expected [xmin, ymin, xmax, ymax]");
    spec.world_bounds = {{detail::number((*b)[0], "bounds"), detail::number((*b)[1], "bounds")},
                         {detail::number((*b)[2], "bounds"), detail::number((*b)[3], "bounds")}};
  } else {
    // Smallest box holding walls, starts and goals, padded by a metre.
    bool first = true;
    auto take = [&](const Vec2& p) {
      if (first) spec.world_bounds = {p, p};
      first = false;
      spec.world_bounds.expand(p);
    };
    for (const auto& s : spec.obstacles.segments()) {
      take(s.a);
      take(s.b);
    }
    for (const auto& a : spec.agents) {
      take(a.start);
      for (const auto& g : a.targets) take(goal_position(g));
    }
    if (first) take({0.0, 0.0});
    spec.world_bounds.min -= Vec2{1.0, 1.0};
    spec.world_bounds.max += Vec2{1.0, 1.0};
  }
  for (const auto& s : spec.obstacles.segments()) {
    if (!spec.world_bounds.contains(s.a) || !spec.world_bounds.contains(s.b)) {
      throw ValidationError("obstacles", "segment outside bounds");
    }
  }

  auto cfg = doc.find("config");
  spec.config = detail::parse_config(cfg == doc.end() ? nullptr : &*cfg, max_ped_radius);
  validate(spec);
  return spec;
}

/// Canonical document for a spec: every field explicit, keys sorted.
inline std::string serialize_scenario(const ScenarioSpec& spec) {
  using nlohmann::json;
  json doc = json::object();
  doc["name"] = spec.name;
  doc["bounds"] = {spec.world_bounds.min.x, spec.world_bounds.min.y, spec.world_bounds.max.x,
                   spec.world_bounds.max.y};
  json obstacles = json::array();
  for (const auto& s : spec.obstacles.segments()) obstacles.push_back({s.a.x, s.a.y, s.b.x, s.b.y});
  doc["obstacles"] = std::move(obstacles);

  json agents = json::array();
  for (const auto& a : spec.agents) {
    json j{{"id", a.id},
           {"kind", to_string(a.kind)},
           {"x", a.start.x},
           {"y", a.start.y},
           {"heading", a.heading},
           {"radius", a.radius},
           {"pref_speed", a.pref_speed},
           {"max_speed", a.max_speed}};
    if (a.kind == AgentKind::Pedestrian) {
      json targets = json::array();
      for (const auto& g : a.targets) {
        if (const auto* p = std::get_if<PointGoal>(&g)) {
          targets.push_back({{"type", "point"}, {"x", p->position.x}, {"y", p->position.y}, {"tol", p->tolerance}});
        } else {
          const auto& r = std::get<RegionGoal>(g);
          targets.push_back({{"type", "region"},
                             {"x", r.center.x},
                             {"y", r.center.y},
                             {"hx", r.half_extents.x},
                             {"hy", r.half_extents.y}});
        }
      }
      j["targets"] = std::move(targets);
      j["cycle"] = a.cycle_targets;
    }
    agents.push_back(std::move(j));
  }
  doc["agents"] = std::move(agents);

  const auto& c = spec.config;
  doc["config"] = {
      {"dt", c.dt},
      {"planner", to_string(c.planner)},
      {"avoidance", to_string(c.avoidance)},
      {"planner_params", c.planner_params},
      {"avoidance_params", c.avoidance_params},
      {"seed", c.seed},
      {"laser",
       {{"fov", c.laser.fov},
        {"max_range", c.laser.max_range},
        {"beam_count", c.laser.beam_count},
        {"rate_divisor", c.laser.rate_divisor},
        {"mount_offset", {c.laser.mount_offset.x, c.laser.mount_offset.y}}}}};
  return doc.dump(2) + "\n";
}

}  // namespace crowdsim
