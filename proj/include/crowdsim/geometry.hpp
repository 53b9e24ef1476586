#pragma once

// Planar geometry used by planning, avoidance and the simulated laser:
// vectors, wall segments, occupancy grids and exact raycasting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crowdsim/error.hpp"

namespace crowdsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }

  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

/// z-component of the 3-D cross product; positive when b is counter-clockwise of a.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Counter-clockwise perpendicular.
constexpr Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

/// Unit vector along v, or the zero vector when |v| <= eps.
inline Vec2 normalized(const Vec2& v, double eps = 0.0) {
  const double n = v.norm();
  return n > eps ? v / n : Vec2{};
}

/// Scale v down to magnitude `limit` if it is longer.
inline Vec2 clamp_norm(const Vec2& v, double limit) {
  const double n2 = v.squared_norm();
  if (n2 > limit * limit && n2 > 0.0) {
    return v * (limit / std::sqrt(n2));
  }
  return v;
}

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

struct Rect {
  Vec2 min;
  Vec2 max;

  constexpr bool operator==(const Rect&) const = default;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool degenerate() const { return !(width() > 0.0) || !(height() > 0.0); }
  bool contains(const Vec2& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  void expand(const Vec2& p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y)};
  }
};

struct Segment {
  Vec2 a;
  Vec2 b;

  constexpr bool operator==(const Segment&) const = default;

  Vec2 direction() const { return b - a; }
  double length() const { return (b - a).norm(); }
};

/// Closest point of segment `s` to `p`.
inline Vec2 closest_point(const Segment& s, const Vec2& p) {
  const Vec2 e = s.b - s.a;
  const double len2 = e.squared_norm();
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, e) / len2, 0.0, 1.0);
  return s.a + e * t;
}

inline double distance(const Segment& s, const Vec2& p) { return (p - closest_point(s, p)).norm(); }

inline bool segments_intersect(const Segment& s, const Segment& t) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); };
  auto on_segment = [](const Segment& seg, const Vec2& p) {
    return std::min(seg.a.x, seg.b.x) <= p.x && p.x <= std::max(seg.a.x, seg.b.x) &&
           std::min(seg.a.y, seg.b.y) <= p.y && p.y <= std::max(seg.a.y, seg.b.y);
  };
  const double d1 = orient(t.a, t.b, s.a);
  const double d2 = orient(t.a, t.b, s.b);
  const double d3 = orient(s.a, s.b, t.a);
  const double d4 = orient(s.a, s.b, t.b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(t, s.a)) || (d2 == 0 && on_segment(t, s.b)) ||
         (d3 == 0 && on_segment(s, t.a)) || (d4 == 0 && on_segment(s, t.b));
}

inline double distance(const Segment& s, const Segment& t) {
  if (segments_intersect(s, t)) return 0.0;
  return std::min({distance(s, t.a), distance(s, t.b), distance(t, s.a), distance(t, s.b)});
}

/// Distance between a segment and a closed axis-aligned box (0 when they touch).
inline double distance(const Segment& s, const Rect& box) {
  if (box.contains(s.a) || box.contains(s.b)) return 0.0;
  const Vec2 c0 = box.min;
  const Vec2 c1{box.max.x, box.min.y};
  const Vec2 c2 = box.max;
  const Vec2 c3{box.min.x, box.max.y};
  return std::min({distance(s, Segment{c0, c1}), distance(s, Segment{c1, c2}),
                   distance(s, Segment{c2, c3}), distance(s, Segment{c3, c0})});
}

/// The static map: wall segments plus a rectangle containing all of them.
class ObstacleSet {
 public:
  ObstacleSet() = default;

  explicit ObstacleSet(std::vector<Segment> segments) : segments_(std::move(segments)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (i == 0) bounds_ = {s.a, s.a};
      bounds_.expand(s.a);
      bounds_.expand(s.b);
    }
  }

  const std::vector<Segment>& segments() const { return segments_; }
  const Rect& bounds() const { return bounds_; }
  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }

  /// Distance to the nearest wall, +inf when there are none.
  double clearance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : segments_) best = std::min(best, distance(s, p));
    return best;
  }

  bool operator==(const ObstacleSet&) const = default;

 private:
  std::vector<Segment> segments_;
  Rect bounds_{};
};

struct Disc {
  Vec2 center;
  double radius = 0.0;
};

/// Smallest t in (0, max_range] where origin + t*direction meets a segment
/// or a disc boundary, or nullopt. Discs that contain the origin are skipped.
inline std::optional<double> ray_cast(const Vec2& origin, const Vec2& direction, double max_range,
                                      const ObstacleSet& obstacles, std::span<const Disc> discs) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw InvalidDirection("ray direction must be unit length");
  }
  constexpr double kEps = 1e-12;
  double best = std::numeric_limits<double>::infinity();

  for (const auto& seg : obstacles.segments()) {
    const Vec2 e = seg.b - seg.a;
    const Vec2 ao = seg.a - origin;
    const double denom = cross(direction, e);
    if (std::abs(denom) <= kEps * e.norm()) {
      // Parallel; only a collinear segment can be hit, at its nearer endpoint.
      if (std::abs(cross(ao, direction)) > kEps * std::max(1.0, ao.norm())) continue;
      for (const Vec2& end : {seg.a, seg.b}) {
        const double t = dot(end - origin, direction);
        if (t > 0.0) best = std::min(best, t);
      }
      continue;
    }
    const double t = cross(ao, e) / denom;
    const double s = cross(ao, direction) / denom;
    if (t > 0.0 && s >= 0.0 && s <= 1.0) best = std::min(best, t);
  }

  for (const auto& disc : discs) {
    const Vec2 oc = origin - disc.center;
    const double c = oc.squared_norm() - disc.radius * disc.radius;
    if (c <= 0.0) continue;
    const double b = dot(direction, oc);
    const double disc2 = b * b - c;
    if (disc2 < -kEps) continue;
    const double t = -b - std::sqrt(std::max(disc2, 0.0));
    if (t > 0.0) best = std::min(best, t);
  }

  if (best <= max_range) return best;
  return std::nullopt;
}

struct Cell {
  int x = 0;
  int y = 0;
  constexpr bool operator==(const Cell&) const = default;
};

/// Boolean occupancy over a regular grid anchored at `origin` (lower-left corner of cell 0,0).
class OccupancyGrid {
 public:
  OccupancyGrid(Vec2 origin, double resolution, int width, int height)
      : origin_(origin), resolution_(resolution), width_(width), height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
    if (!(resolution > 0.0)) throw Error("grid resolution must be positive");
    if (width <= 0 || height <= 0) throw Error("grid dimensions must be positive");
  }

  Vec2 origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const { return cells_.size(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  bool occupied(Cell c) const { return cells_[index(c)] != 0; }
  void set_occupied(Cell c, bool value = true) { cells_[index(c)] = value ? 1 : 0; }

  std::size_t occupied_count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
  }

  Cell cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  Vec2 center_of(Cell c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
  }
  Rect box_of(Cell c) const {
    const Vec2 lo{origin_.x + c.x * resolution_, origin_.y + c.y * resolution_};
    return {lo, {lo.x + resolution_, lo.y + resolution_}};
  }

 private:
  Vec2 origin_;
  double resolution_;
  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
};

/// Conservative rasterization: a cell is occupied when its closed square is
/// within `inflation` of some segment. The grid spans `world_bounds` if given,
/// otherwise the obstacle bounds.
inline OccupancyGrid rasterize(const ObstacleSet& obstacles, double resolution, double inflation,
                               std::optional<Rect> world_bounds = std::nullopt) {
  if (!(resolution > 0.0)) throw Error("rasterize: resolution must be positive");
  if (!(inflation >= 0.0)) throw Error("rasterize: inflation must be non-negative");
  Rect bounds;
  if (world_bounds) {
    bounds = *world_bounds;
  } else if (!obstacles.empty()) {
    bounds = obstacles.bounds();
  }
  if (bounds.degenerate()) throw EmptyBounds("rasterize: degenerate bounds");

  const int width = std::max(1, static_cast<int>(std::ceil(bounds.width() / resolution - 1e-9)));
  const int height = std::max(1, static_cast<int>(std::ceil(bounds.height() / resolution - 1e-9)));
  OccupancyGrid grid(bounds.min, resolution, width, height);

  for (const auto& seg : obstacles.segments()) {
    const Cell lo = grid.cell_of({std::min(seg.a.x, seg.b.x) - inflation,
                                  std::min(seg.a.y, seg.b.y) - inflation});
    const Cell hi = grid.cell_of({std::max(seg.a.x, seg.b.x) + inflation,
                                  std::max(seg.a.y, seg.b.y) + inflation});
    // Cells are closed squares, so a point on a shared edge also touches the neighbour.
    for (int y = std::max(0, lo.y - 1); y <= std::min(height - 1, hi.y + 1); ++y) {
      for (int x = std::max(0, lo.x - 1); x <= std::min(width - 1, hi.x + 1); ++x) {
        const Cell c{x, y};
        if (grid.occupied(c)) continue;
        if (distance(seg, grid.box_of(c)) <= inflation) grid.set_occupied(c);
      }
    }
  }
  return grid;
}

}  // namespace crowdsim
