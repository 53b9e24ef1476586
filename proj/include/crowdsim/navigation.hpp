#pragma once

// Goal selection over target sequences and plan computation: grid A* with
// waypoint following, and an attractive/repulsive potential field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "crowdsim/error.hpp"
#include "crowdsim/geometry.hpp"
#include "crowdsim/scenario.hpp"

namespace crowdsim {

struct TargetProgress {
  AgentId agent_id = 0;
  std::size_t index = 0;
  bool done = false;
  bool operator==(const TargetProgress&) const = default;
};

/// Move to the next target once `position` is inside the current one.
/// Wraps to the first target when cycling, otherwise marks the sequence done.
inline TargetProgress advance_goal(TargetProgress progress, const Vec2& position,
                                   std::span<const GoalSpec> targets, bool cycle_targets) {
  if (progress.done) return progress;
  if (targets.empty()) {
    progress.done = true;
    return progress;
  }
  if (!goal_contains(targets[progress.index], position)) return progress;
  if (progress.index + 1 < targets.size()) {
    ++progress.index;
  } else if (cycle_targets) {
    progress.index = 0;
  } else {
    progress.done = true;
  }
  return progress;
}

struct Path {
  std::vector<Vec2> waypoints;
  double cost = 0.0;
  bool operator==(const Path&) const = default;
};

namespace detail {

inline constexpr double kSqrt2 = 1.41421356237309504880;

inline double octile(Cell a, Cell b, double resolution) {
  const int dx = std::abs(a.x - b.x);
  const int dy = std::abs(a.y - b.y);
  const int lo = std::min(dx, dy);
  const int hi = std::max(dx, dy);
  return resolution * ((hi - lo) + kSqrt2 * lo);
}

struct OpenEntry {
  double f;
  std::uint64_t seq;
  std::size_t index;
};

// Lowest f first; among equal f the most recently pushed entry wins.
struct OpenOrder {
  bool operator()(const OpenEntry& l, const OpenEntry& r) const {
    if (l.f != r.f) return l.f > r.f;
    return l.seq < r.seq;
  }
};

}  // namespace detail

/// The eight grid moves in a fixed order. A diagonal move is allowed only
/// when both cells it squeezes past are free, so paths never clip a corner.
inline bool grid_move_allowed(const OccupancyGrid& grid, Cell from, int dx, int dy) {
  const Cell to{from.x + dx, from.y + dy};
  if (!grid.in_bounds(to) || grid.occupied(to)) return false;
  if (dx != 0 && dy != 0) {
    if (grid.occupied({from.x + dx, from.y}) || grid.occupied({from.x, from.y + dy})) return false;
  }
  return true;
}

inline constexpr int kGridMoves[8][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1},
                                         {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};

/// Minimum-cost 8-connected path between the cells containing `start` and
/// `goal`, as a list of cell centers.
inline Path astar_plan(const OccupancyGrid& grid, const Vec2& start, const Vec2& goal) {
  const Cell s = grid.cell_of(start);
  const Cell g = grid.cell_of(goal);
  if (!grid.in_bounds(s)) throw OutOfBounds("astar: start outside grid");
  if (!grid.in_bounds(g)) throw OutOfBounds("astar: goal outside grid");
  if (grid.occupied(s)) throw OccupiedEndpoint("astar: start cell occupied");
  if (grid.occupied(g)) throw OccupiedEndpoint("astar: goal cell occupied");

  const double res = grid.resolution();
  const std::size_t n = grid.cell_count();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, detail::OpenOrder> open;
  std::uint64_t seq = 0;

  const std::size_t start_index = grid.index(s);
  const std::size_t goal_index = grid.index(g);
  cost[start_index] = 0.0;
  open.push({detail::octile(s, g, res), seq++, start_index});

  const auto width = static_cast<std::size_t>(grid.width());
  bool found = false;
  while (!open.empty()) {
    const auto top = open.top();
    open.pop();
    if (closed[top.index]) continue;
    closed[top.index] = 1;
    if (top.index == goal_index) {
      found = true;
      break;
    }
    const Cell c{static_cast<int>(top.index % width), static_cast<int>(top.index / width)};
    for (const auto& m : kGridMoves) {
      if (!grid_move_allowed(grid, c, m[0], m[1])) continue;
      const Cell next{c.x + m[0], c.y + m[1]};
      const std::size_t ni = grid.index(next);
      if (closed[ni]) continue;
      const double step = (m[0] != 0 && m[1] != 0) ? res * detail::kSqrt2 : res;
      const double candidate = cost[top.index] + step;
      if (candidate < cost[ni]) {
        cost[ni] = candidate;
        parent[ni] = top.index;
        open.push({candidate + detail::octile(next, g, res), seq++, ni});
      }
    }
  }
  if (!found) throw NoPath("astar: goal unreachable");

  Path path;
  std::size_t axial = 0;
  std::size_t diagonal = 0;
  for (std::size_t i = goal_index; i != kNone; i = parent[i]) {
    const Cell c{static_cast<int>(i % width), static_cast<int>(i / width)};
    if (!path.waypoints.empty()) {
      const Cell prev = grid.cell_of(path.waypoints.back());
      (prev.x != c.x && prev.y != c.y) ? ++diagonal : ++axial;
    }
    path.waypoints.push_back(grid.center_of(c));
  }
  std::reverse(path.waypoints.begin(), path.waypoints.end());
  path.cost = res * static_cast<double>(axial) + res * detail::kSqrt2 * static_cast<double>(diagonal);
  return path;
}

/// Nearest free cell to `c` by breadth-first search over 4-neighbours, or
/// nullopt when the grid has no free cell.
inline std::optional<Cell> nearest_free_cell(const OccupancyGrid& grid, Cell c) {
  c.x = std::clamp(c.x, 0, grid.width() - 1);
  c.y = std::clamp(c.y, 0, grid.height() - 1);
  if (!grid.occupied(c)) return c;
  std::vector<std::uint8_t> seen(grid.cell_count(), 0);
  std::deque<Cell> queue{c};
  seen[grid.index(c)] = 1;
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    if (!grid.occupied(cur)) return cur;
    for (int k = 0; k < 4; ++k) {
      const Cell next{cur.x + kGridMoves[k][0], cur.y + kGridMoves[k][1]};
      if (!grid.in_bounds(next) || seen[grid.index(next)]) continue;
      seen[grid.index(next)] = 1;
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

/// Index of the waypoint closest to `position`.
inline std::size_t nearest_waypoint(const Path& path, const Vec2& position) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
    const double d2 = (path.waypoints[i] - position).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

/// Pure-pursuit style steering: head for the first waypoint at least
/// `lookahead` metres ahead along the path, measured from the closest point
/// of the path polyline, at `pref_speed`. Returns zero within
/// `goal_tolerance` of the final waypoint.
inline Vec2 preferred_velocity_astar(const Vec2& position, const Path& path, double pref_speed,
                                     double lookahead, double goal_tolerance) {
  const auto& w = path.waypoints;
  if (w.empty()) return {};
  const Vec2 last = w.back();
  if ((last - position).norm() <= goal_tolerance) return {};
  if (w.size() == 1) return normalized(last - position) * pref_speed;

  // Closest point on the polyline; earlier segments win ties.
  std::size_t seg = 0;
  Vec2 foot = w[0];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const Vec2 q = closest_point(Segment{w[i], w[i + 1]}, position);
    const double d2 = (q - position).squared_norm();
    if (d2 < best) {
      best = d2;
      seg = i;
      foot = q;
    }
  }
  Vec2 aim = last;
  double along = 0.0;
  Vec2 prev = foot;
  for (std::size_t i = seg + 1; i < w.size(); ++i) {
    along += (w[i] - prev).norm();
    prev = w[i];
    if (along >= lookahead) {
      aim = w[i];
      break;
    }
  }
  return normalized(aim - position) * pref_speed;
}

struct PotentialParams {
  double k_att = 1.0;
  double k_rep = 0.5;
  double rho0 = 2.0;
};

/// U(p) = k_att/2 |p - goal|^2 + sum over walls closer than rho0 of
/// k_rep/2 (1/rho - 1/rho0)^2, with rho the distance to the wall.
inline double potential(const Vec2& position, const Vec2& goal, const ObstacleSet& obstacles,
                        const PotentialParams& params) {
  double u = 0.5 * params.k_att * (position - goal).squared_norm();
  for (const auto& seg : obstacles.segments()) {
    const double rho = distance(seg, position);
    if (rho < params.rho0) {
      const double d = 1.0 / rho - 1.0 / params.rho0;
      u += 0.5 * params.k_rep * d * d;
    }
  }
  return u;
}

/// -grad U at `position`, unclamped. Requires every wall clearance > 0.
inline Vec2 potential_descent(const Vec2& position, const Vec2& goal, const ObstacleSet& obstacles,
                              const PotentialParams& params) {
  Vec2 v = (goal - position) * params.k_att;
  for (const auto& seg : obstacles.segments()) {
    const Vec2 away = position - closest_point(seg, position);
    const double rho = away.norm();
    if (rho < params.rho0) {
      const double mag = params.k_rep * (1.0 / rho - 1.0 / params.rho0) / (rho * rho);
      v += away * (mag / rho);
    }
  }
  return v;
}

/// Potential-field preferred velocity: -grad U capped at `pref_speed`. An agent
/// touching a wall (clearance < 1e-6) is pushed straight off it at full speed.
inline Vec2 potential_field_velocity(const Vec2& position, const Vec2& goal, const ObstacleSet& obstacles,
                                     const PotentialParams& params, double pref_speed) {
  Vec2 push;
  bool singular = false;
  for (const auto& seg : obstacles.segments()) {
    const Vec2 away = position - closest_point(seg, position);
    if (away.norm() < 1e-6) {
      singular = true;
      // On the wall itself: use the wall normal on the side facing the goal.
      Vec2 normal = normalized(perp(seg.b - seg.a));
      if (dot(normal, goal - position) < 0.0) normal = -normal;
      push += away.norm() > 0.0 ? normalized(away) : normal;
    }
  }
  if (singular) return normalized(push) * pref_speed;
  return clamp_norm(potential_descent(position, goal, obstacles, params), pref_speed);
}

}  // namespace crowdsim
