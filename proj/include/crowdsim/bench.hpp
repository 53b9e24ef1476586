#pragma once

// Decision-cycle timing harness: adds stationary robots to a scenario and
// measures wall time per cycle with every robot scanning every tick.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crowdsim/engine.hpp"
#include "crowdsim/error.hpp"
#include "crowdsim/scenario.hpp"

namespace crowdsim {

struct BenchRow {
  std::size_t robots = 0;
  std::size_t pedestrians = 0;
  std::size_t cycles = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Hardware context, e.g. "4 hardware threads, engine used 4".
  std::string environment;
};

inline constexpr double kBenchRobotRadius = 0.3;

/// Returns a copy of `spec` with `count` extra robots at free poses. Placement
/// depends only on the spec's seed, so equal inputs give equal outputs.
inline ScenarioSpec place_robots(const ScenarioSpec& spec, std::size_t count, double clearance = 0.1) {
  ScenarioSpec out = spec;
  if (count == 0) return out;
  std::mt19937_64 rng(spec.config.seed ^ 0x9e3779b97f4a7c15ULL);
  const Rect& b = spec.world_bounds;
  const double r = kBenchRobotRadius;
  if (b.max.x - b.min.x <= 2 * r || b.max.y - b.min.y <= 2 * r) throw PlacementFailure("world bounds too small");
  std::uniform_real_distribution<double> ux(b.min.x + r, b.max.x - r);
  std::uniform_real_distribution<double> uy(b.min.y + r, b.max.y - r);
  std::uniform_real_distribution<double> heading(-M_PI, M_PI);

  AgentId next_id = 0;
  for (const auto& a : spec.agents) next_id = std::max(next_id, a.id + 1);

  constexpr int kAttempts = 10000;
  for (std::size_t k = 0; k < count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const Vec2 p{ux(rng), uy(rng)};
      if (spec.obstacles.clearance(p) < r + clearance) continue;
      const bool free = std::all_of(out.agents.begin(), out.agents.end(), [&](const AgentSpec& a) {
        return (a.start - p).norm() >= a.radius + r + clearance;
      });
      if (!free) continue;
      AgentSpec robot;
      robot.id = next_id++;
      robot.kind = AgentKind::Robot;
      robot.start = p;
      robot.heading = heading(rng);
      robot.radius = r;
      robot.pref_speed = 0.0;
      robot.max_speed = 1.0;
      out.agents.push_back(robot);
      placed = true;
    }
    if (!placed) {
      throw PlacementFailure("could not place robot " + std::to_string(k + 1) + " of " + std::to_string(count) +
                             " after " + std::to_string(kAttempts) + " attempts");
    }
  }
  return out;
}

/// Mean and sample standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// One row per robot count. `threads` 0 reads CROWDSIM_THREADS.
///
/// The counts are stepped round-robin, one cycle each in turn, so that drift
/// in machine load is shared by every row instead of biasing whichever row
/// happened to run during it. Every cycle is timed, the first (which plans
/// all paths) included.
inline BenchReport run_bench(const ScenarioSpec& spec, const std::vector<std::size_t>& robot_counts,
                             std::size_t cycles, unsigned threads = 0) {
  if (cycles < 1) throw Error("cycles must be >= 1");
  std::size_t pedestrians = 0;
  for (const auto& a : spec.agents) pedestrians += a.kind == AgentKind::Pedestrian;

  struct Run {
    Simulation sim;
    CommandMap stop;
    std::vector<double> samples;
  };
  std::vector<Run> runs;
  runs.reserve(robot_counts.size());
  for (std::size_t count : robot_counts) {
    ScenarioSpec s = place_robots(spec, count);
    s.config.laser.rate_divisor = 1;
    Run& run = runs.emplace_back(Run{Simulation(std::move(s), {threads}), {}, {}});
    for (AgentId id : run.sim.robot_ids()) run.stop[id] = {};
    run.samples.reserve(cycles);
  }
  for (std::size_t c = 0; c < cycles; ++c) {
    for (auto& run : runs) run.samples.push_back(run.sim.step(run.stop, {.sense = true}).total_ms);
  }

  BenchReport report;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto [mean, sd] = mean_std(runs[k].samples);
    report.rows.push_back({robot_counts[k], pedestrians, cycles, mean, sd});
  }
  const unsigned used = runs.empty() ? configured_threads() : runs.front().sim.threads();
  report.environment = std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
                       " hardware threads, engine used " + std::to_string(used);
  return report;
}

inline std::string bench_csv(const BenchReport& report) {
  std::string out = "robots,pedestrians,cycles,mean_ms,std_ms\n";
  char line[128];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%.4f,%.4f\n", r.robots, r.pedestrians, r.cycles, r.mean_ms,
                  r.std_ms);
    out += line;
  }
  return out;
}

}  // namespace crowdsim
