#pragma once

// Per-tick velocity adjustment for pedestrians: an exponential social force
// model, and ORCA (optimal reciprocal collision avoidance) with its
// incremental 2-D linear program and 3-D fallback.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "crowdsim/agent.hpp"
#include "crowdsim/geometry.hpp"

namespace crowdsim {

struct SocialForceParams {
  double tau = 0.5;
  double A = 2.0;
  double B = 0.08;
  double wall_A = 4.0;
  double wall_B = 0.06;
  double neighbor_dist = 5.0;
  /// Multiplier on the interaction strength when the neighbour is a robot.
  double robot_scale = 1.0;
};

struct OrcaParams {
  double time_horizon = 2.0;
  double time_horizon_obst = 1.0;
  double neighbor_dist = 10.0;
  std::size_t max_neighbors = 10;
  /// Share of the avoidance effort a pedestrian takes against a robot.
  /// Robots never avoid, so the default is the full share.
  double robot_responsibility = 1.0;
};

/// Half-plane in velocity space: feasible velocities lie on the left of
/// `direction` through `point`.
struct OrcaLine {
  Vec2 point;
  Vec2 direction;
  bool operator==(const OrcaLine&) const = default;
};

/// Signed violation of a half-plane; positive when `v` lies outside it.
inline double violation(const OrcaLine& line, const Vec2& v) { return cross(line.direction, line.point - v); }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic unit vector pushing agent `self` away from `other` when the
/// two centers coincide. The two agents of a pair get opposite directions.
inline Vec2 coincident_direction(AgentId self, AgentId other) {
  const auto lo = static_cast<std::uint64_t>(std::min(self, other));
  const auto hi = static_cast<std::uint64_t>(std::max(self, other));
  const std::uint64_t h = splitmix64(lo * 0x100000001b3ULL ^ splitmix64(hi));
  const double angle = static_cast<double>(h >> 11) * (2.0 * M_PI / 9007199254740992.0);
  const Vec2 d{std::cos(angle), std::sin(angle)};
  return self <= other ? d : -d;
}

inline std::vector<const AgentState*> by_id(std::span<const AgentState> agents) {
  std::vector<const AgentState*> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(&a);
  std::sort(out.begin(), out.end(), [](const AgentState* l, const AgentState* r) { return l->id < r->id; });
  return out;
}

}  // namespace detail

/// Social force update: v' = clamp(v + dt F, max_speed), where F is the
/// relaxation toward `v_pref` plus exponential repulsion from neighbours and
/// walls within `neighbor_dist`. Neighbours are summed in ascending id order.
inline Vec2 social_force_velocity(const AgentState& self, const Vec2& v_pref,
                                  std::span<const AgentState> neighbors, const ObstacleSet& obstacles,
                                  const SocialForceParams& params, double dt) {
  Vec2 force = (v_pref - self.velocity) / params.tau;

  for (const AgentState* other : detail::by_id(neighbors)) {
    const Vec2 diff = self.position - other->position;
    const double d = diff.norm();
    if (d > params.neighbor_dist) continue;
    const Vec2 n = d < 1e-9 ? detail::coincident_direction(self.id, other->id) : diff / d;
    const double strength = other->is_robot() ? params.A * params.robot_scale : params.A;
    force += n * (strength * std::exp((self.radius + other->radius - d) / params.B));
  }

  for (const auto& seg : obstacles.segments()) {
    const Vec2 diff = self.position - closest_point(seg, self.position);
    const double d = diff.norm();
    if (d > params.neighbor_dist) continue;
    const Vec2 n = d > 0.0 ? diff / d : normalized(perp(seg.b - seg.a));
    force += n * (params.wall_A * std::exp((self.radius - d) / params.wall_B));
  }

  return clamp_norm(self.velocity + force * dt, self.max_speed);
}

namespace detail {

/// A point on the boundary of a velocity obstacle with its outward normal.
struct BoundaryPoint {
  Vec2 point;
  Vec2 normal;
  double dist2 = std::numeric_limits<double>::infinity();
};

inline void consider(BoundaryPoint& best, const Vec2& query, const Vec2& point, const Vec2& normal) {
  const double d2 = (point - query).squared_norm();
  if (d2 < best.dist2) best = {point, normal, d2};
}

/// Nearest point to `query` on a leg ray {s * dir : s >= start}.
inline Vec2 on_leg(const Vec2& query, const Vec2& dir, double start) {
  return dir * std::max(dot(query, dir), start);
}

/// Nearest point to `query` on the origin-facing part of a circle, if the
/// nearest point of the full circle lies there.
inline std::optional<std::pair<Vec2, Vec2>> on_front_arc(const Vec2& query, const Vec2& center, double radius) {
  Vec2 n = normalized(query - center);
  if (n == Vec2{}) n = normalized(-center);
  const Vec2 q = center + n * radius;
  if (dot(n, q) > 0.0) return std::nullopt;
  return std::make_pair(q, n);
}

inline OrcaLine line_from(const Vec2& velocity, const Vec2& u, const Vec2& normal, double share) {
  return {velocity + u * share, {normal.y, -normal.x}};
}

}  // namespace detail

/// ORCA half-plane induced on `self` by one neighbour. `share` is the part of
/// the escape vector u that `self` takes on (1/2 for reciprocal agents).
inline OrcaLine orca_agent_line(const AgentState& self, const AgentState& other, double time_horizon, double dt,
                                double share) {
  const Vec2 rel_pos = other.position - self.position;
  const Vec2 rel_vel = self.velocity - other.velocity;
  const double dist = rel_pos.norm();
  const double combined = self.radius + other.radius;

  if (dist <= combined) {
    // Already overlapping: pick the velocity that separates the pair within dt.
    const Vec2 w = rel_vel - rel_pos / dt;
    Vec2 unit_w = normalized(w);
    if (unit_w == Vec2{}) {
      unit_w = dist > 0.0 ? -rel_pos / dist : -detail::coincident_direction(self.id, other.id);
    }
    const Vec2 u = unit_w * (combined / dt - w.norm());
    return detail::line_from(self.velocity, u, unit_w, share);
  }

  // Truncated cone: apex at the origin, cut off by the disc of radius
  // combined/tau around rel_pos/tau, bounded by the two tangent legs.
  const double leg = std::sqrt(dist * dist - combined * combined);
  const double d2 = dist * dist;
  const Vec2 left_dir{(rel_pos.x * leg - rel_pos.y * combined) / d2, (rel_pos.x * combined + rel_pos.y * leg) / d2};
  const Vec2 right_dir{(rel_pos.x * leg + rel_pos.y * combined) / d2, (-rel_pos.x * combined + rel_pos.y * leg) / d2};
  const double leg_start = leg / time_horizon;

  detail::BoundaryPoint best;
  detail::consider(best, rel_vel, detail::on_leg(rel_vel, left_dir, leg_start), perp(left_dir));
  detail::consider(best, rel_vel, detail::on_leg(rel_vel, right_dir, leg_start), -perp(right_dir));
  if (auto arc = detail::on_front_arc(rel_vel, rel_pos / time_horizon, combined / time_horizon)) {
    detail::consider(best, rel_vel, arc->first, arc->second);
  }
  return detail::line_from(self.velocity, best.point - rel_vel, best.normal, share);
}

/// ORCA half-plane for a static wall segment, with full responsibility. The
/// obstacle's velocity obstacle is the cone of the segment swept by the agent
/// radius, truncated at `time_horizon`.
inline OrcaLine orca_segment_line(const AgentState& self, const Segment& seg, double time_horizon) {
  const Vec2 a = seg.a - self.position;
  const Vec2 b = seg.b - self.position;
  const double r = self.radius;
  const Vec2 nearest = closest_point(Segment{a, b}, Vec2{});
  const double dist = nearest.norm();
  const Vec2 v = self.velocity;

  if (dist <= r) {
    // Touching or inside the wall: forbid any motion further into it.
    Vec2 n = normalized(-nearest);
    if (n == Vec2{}) n = normalized(perp(b - a));
    return {Vec2{}, {n.y, -n.x}};
  }

  const double inv_tau = 1.0 / time_horizon;
  const Vec2 e = normalized(b - a);
  const Vec2 m = nearest / dist;

  // Angular extent of the swept segment seen from the agent, relative to m.
  struct Tangent {
    double angle;
    Vec2 dir;
    double start;
  };
  auto tangents = [&](const Vec2& c) {
    const double len = c.norm();
    const double half = std::asin(std::min(1.0, r / len));
    const double base = std::atan2(cross(m, c), dot(m, c));
    const double leg = std::sqrt(std::max(0.0, len * len - r * r)) * inv_tau;
    return std::pair{Tangent{base + half, rotate(c / len, half), leg}, Tangent{base - half, rotate(c / len, -half), leg}};
  };
  const auto [left_a, right_a] = tangents(a);
  const auto [left_b, right_b] = tangents(b);
  const Tangent& left = left_a.angle >= left_b.angle ? left_a : left_b;
  const Tangent& right = right_a.angle <= right_b.angle ? right_a : right_b;

  detail::BoundaryPoint best;
  detail::consider(best, v, detail::on_leg(v, left.dir, left.start), perp(left.dir));
  detail::consider(best, v, detail::on_leg(v, right.dir, right.start), -perp(right.dir));

  // Flat side of the swept segment facing the agent.
  Vec2 side_normal = perp(e);
  if (dot(side_normal, a) > 0.0) side_normal = -side_normal;
  if (-dot(side_normal, a) >= r) {
    const Segment side{(a + side_normal * r) * inv_tau, (b + side_normal * r) * inv_tau};
    detail::consider(best, v, closest_point(side, v), side_normal);
  }
  // Rounded caps at either end.
  for (const auto& [center, outward] : {std::pair{a, -e}, std::pair{b, e}}) {
    if (auto arc = detail::on_front_arc(v, center * inv_tau, r * inv_tau)) {
      if (dot(arc->second, outward) >= 0.0) detail::consider(best, v, arc->first, arc->second);
    }
  }
  return detail::line_from(v, best.point - v, best.normal, 1.0);
}

/// Wall constraints for `self`: one per segment within reach in the obstacle horizon.
inline std::vector<OrcaLine> orca_obstacle_lines(const AgentState& self, const ObstacleSet& obstacles,
                                                 const OrcaParams& params) {
  std::vector<OrcaLine> lines;
  const double reach = params.time_horizon_obst * self.max_speed + self.radius;
  for (const auto& seg : obstacles.segments()) {
    if (distance(seg, self.position) < reach) lines.push_back(orca_segment_line(self, seg, params.time_horizon_obst));
  }
  return lines;
}

/// Agent constraints for `self`: the nearest `max_neighbors` within
/// `neighbor_dist`, emitted in ascending id order.
inline std::vector<OrcaLine> orca_agent_lines(const AgentState& self, std::span<const AgentState> neighbors,
                                              const OrcaParams& params, double dt) {
  std::vector<std::pair<double, const AgentState*>> near;
  const double range2 = params.neighbor_dist * params.neighbor_dist;
  for (const auto& other : neighbors) {
    const double d2 = (other.position - self.position).squared_norm();
    if (d2 <= range2) near.emplace_back(d2, &other);
  }
  auto closer = [](const auto& l, const auto& r) {
    return l.first != r.first ? l.first < r.first : l.second->id < r.second->id;
  };
  if (near.size() > params.max_neighbors) {
    std::nth_element(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(params.max_neighbors), near.end(),
                     closer);
    near.resize(params.max_neighbors);
  }
  std::sort(near.begin(), near.end(), [](const auto& l, const auto& r) { return l.second->id < r.second->id; });

  std::vector<OrcaLine> lines;
  lines.reserve(near.size());
  for (const auto& [_, other] : near) {
    const double share = other->is_robot() ? params.robot_responsibility : 0.5;
    lines.push_back(orca_agent_line(self, *other, params.time_horizon, dt, share));
  }
  return lines;
}

/// All constraints for `self`, walls first.
inline std::vector<OrcaLine> orca_lines(const AgentState& self, std::span<const AgentState> neighbors,
                                        const ObstacleSet& obstacles, const OrcaParams& params, double dt) {
  auto lines = orca_obstacle_lines(self, obstacles, params);
  const auto agent_lines = orca_agent_lines(self, neighbors, params, dt);
  lines.insert(lines.end(), agent_lines.begin(), agent_lines.end());
  return lines;
}

namespace detail {

inline constexpr double kLpEpsilon = 1e-12;

// Optimum on line `index` subject to lines [0, index) and the speed disc.
inline bool lp1(std::span<const OrcaLine> lines, std::size_t index, double radius, const Vec2& opt,
                bool direction_opt, Vec2& result) {
  const OrcaLine& line = lines[index];
  const double along = dot(line.point, line.direction);
  const double disc = along * along + radius * radius - line.point.squared_norm();
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  double t_left = -along - root;
  double t_right = -along + root;

  for (std::size_t i = 0; i < index; ++i) {
    const double denom = cross(line.direction, lines[i].direction);
    const double numer = cross(lines[i].direction, line.point - lines[i].point);
    if (std::abs(denom) <= kLpEpsilon) {
      if (numer < 0.0) return false;
      continue;
    }
    const double t = numer / denom;
    if (denom >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = line.point + line.direction * (dot(opt, line.direction) > 0.0 ? t_right : t_left);
  } else {
    const double t = std::clamp(dot(line.direction, opt - line.point), t_left, t_right);
    result = line.point + line.direction * t;
  }
  return true;
}

// Returns lines.size() on success, else the index of the first line that
// could not be satisfied (result then holds the best point before it).
inline std::size_t lp2(std::span<const OrcaLine> lines, double radius, const Vec2& opt, bool direction_opt,
                       Vec2& result) {
  if (direction_opt) {
    result = opt * radius;
  } else if (opt.squared_norm() > radius * radius) {
    result = normalized(opt) * radius;
  } else {
    result = opt;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (violation(lines[i], result) > 0.0) {
      const Vec2 previous = result;
      if (!lp1(lines, i, radius, opt, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimise the largest violation of the soft lines, keeping the first
// `hard_count` lines as hard constraints.
inline void lp3(std::span<const OrcaLine> lines, std::size_t hard_count, std::size_t begin, double radius,
                Vec2& result) {
  double worst = 0.0;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (violation(lines[i], result) <= worst) continue;
    std::vector<OrcaLine> projected(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(hard_count));
    for (std::size_t j = hard_count; j < i; ++j) {
      OrcaLine line;
      const double det = cross(lines[i].direction, lines[j].direction);
      if (std::abs(det) <= kLpEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = (lines[i].point + lines[j].point) * 0.5;
      } else {
        line.point = lines[i].point +
                     lines[i].direction * (cross(lines[j].direction, lines[i].point - lines[j].point) / det);
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    if (lp2(projected, radius, perp(lines[i].direction), true, result) < projected.size()) {
      result = previous;
    }
    worst = violation(lines[i], result);
  }
}

}  // namespace detail

/// Velocity closest to `v_pref` inside every half-plane and the disc
/// |v| <= max_speed. When no such velocity exists, returns the velocity in the
/// disc minimising the largest violation of lines [hard_count, end), keeping
/// the first `hard_count` lines (walls) satisfied.
inline Vec2 orca_solve(std::span<const OrcaLine> lines, const Vec2& v_pref, double max_speed,
                       std::size_t hard_count = 0) {
  Vec2 result;
  const std::size_t failed = detail::lp2(lines, max_speed, v_pref, false, result);
  if (failed < lines.size()) detail::lp3(lines, hard_count, failed, max_speed, result);
  // lp3 intersects far-off projected lines with the disc; cancellation there
  // can leave the result a hair outside it.
  return clamp_norm(result, max_speed);
}

}  // namespace crowdsim
