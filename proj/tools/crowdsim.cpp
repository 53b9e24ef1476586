// crowdsim command line: validate, run (TCP service), replay, bench.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "crowdsim/bench.hpp"
#include "crowdsim/scenario.hpp"
#include "crowdsim/server.hpp"
#include "crowdsim/trace.hpp"

namespace {

using namespace crowdsim;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

ScenarioSpec load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  return out;
}

int cmd_validate(const std::string& file) {
  try {
    const auto spec = load(file);
    std::cout << file << ": ok (" << spec.agents.size() << " agents)\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << file << ": invalid field '" << e.field() << "': " << e.what() << "\n";
  } catch (const SyntaxError& e) {
    std::cerr << file << ": syntax error at " << e.what() << "\n";
  }
  return 1;
}

struct RunArgs {
  std::string file;
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;
  std::string mode = "realtime";
  double rate = 10.0;
  std::string record;
  std::string trace;
  std::uint64_t steps = 0;
  unsigned threads = 0;
};

int cmd_run(const RunArgs& args) {
  ServerOptions options;
  options.host = args.host;
  options.port = args.port;
  options.mode = args.mode == "lockstep" ? ServeMode::Lockstep : ServeMode::Realtime;
  options.rate_hz = args.rate;
  options.threads = args.threads;
  if (args.steps > 0) options.max_steps = args.steps;

  std::ofstream record;
  std::ofstream trace;
  if (!args.record.empty()) {
    record = open_output(args.record);
    options.on_tick = [&](const SimSnapshot& s) { record << trajectory_line(s) << '\n'; };
  }
  if (!args.trace.empty()) {
    trace = open_output(args.trace);
    options.on_commands = [&](std::uint64_t tick, const CommandMap& commands) {
      for (const auto& [id, c] : commands) trace << trace_line({tick, id, c.linear, c.angular}) << '\n';
    };
  }

  // Before the listener exists, so an early signal cannot hit the default action.
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  Server server(load(args.file), std::move(options));
  std::cerr << "crowdsim: serving '" << server.simulation().spec().name << "' on " << args.host << ":"
            << server.port() << " (" << args.mode << ")" << std::endl;

  std::stop_source stop;
  std::jthread watcher([&](std::stop_token done) {
    while (!done.stop_requested()) {
      if (g_interrupted.load()) {
        stop.request_stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  server.run(stop.get_token());
  watcher.request_stop();
  std::cerr << "crowdsim: stopped at tick " << server.simulation().tick() << std::endl;
  return 0;
}

int cmd_replay(const std::string& file, const std::string& trace_file, std::uint64_t steps,
               const std::string& record, unsigned threads) {
  std::ifstream in(trace_file);
  if (!in) throw Error("cannot open " + trace_file);
  const auto log = replay(load(file), read_trace(in), steps, threads);
  std::ofstream out;
  if (!record.empty()) out = open_output(record);
  std::ostream& sink = record.empty() ? std::cout : out;
  for (const auto& line : log) sink << line << '\n';
  return 0;
}

int cmd_bench(const std::string& file, const std::vector<std::size_t>& robots, std::size_t cycles,
              const std::string& csv, unsigned threads) {
  const auto report = run_bench(load(file), robots, cycles, threads);
  std::printf("%8s %12s %8s %10s %10s\n", "robots", "pedestrians", "cycles", "mean_ms", "std_ms");
  for (const auto& r : report.rows) {
    std::printf("%8zu %12zu %8zu %10.3f %10.3f\n", r.robots, r.pedestrians, r.cycles, r.mean_ms, r.std_ms);
  }
  std::printf("(%s)\n", report.environment.c_str());
  if (!csv.empty()) open_output(csv) << bench_csv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd simulator for robot navigation testing"};
  app.require_subcommand(1);

  std::string file;
  unsigned threads = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "Scenario JSON")->required();
    sub->add_option("--threads", threads, "Worker threads per cycle (0 = CROWDSIM_THREADS or all cores)");
  };

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("file", file, "Scenario JSON")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Serve a scenario over TCP");
  add_common(run_cmd);
  run_cmd->add_option("--host", run.host, "Listen address")->capture_default_str();
  run_cmd->add_option("--port", run.port, "Listen port (0 picks a free one)")->capture_default_str();
  run_cmd->add_option("--mode", run.mode, "Stepping mode")
      ->check(CLI::IsMember({"realtime", "lockstep"}))
      ->capture_default_str();
  run_cmd->add_option("--rate", run.rate, "Steps per second in realtime mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--record", run.record, "Write the trajectory log here");
  run_cmd->add_option("--trace", run.trace, "Write the consumed command trace here");
  run_cmd->add_option("--steps", run.steps, "Stop after this many steps (0 = never)");

  std::string trace_file;
  std::string record;
  std::uint64_t steps = 0;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a scenario from a command trace");
  add_common(replay_cmd);
  replay_cmd->add_option("--trace", trace_file, "Command trace from `run --trace`")->required();
  replay_cmd->add_option("--steps", steps, "Number of steps")->required();
  replay_cmd->add_option("--record", record, "Trajectory log output (default stdout)");

  std::vector<std::size_t> robots;
  std::size_t cycles = 0;
  std::string csv;
  auto* bench = app.add_subcommand("bench", "Time decision cycles with added robots");
  add_common(bench);
  bench->add_option("--robots", robots, "Comma-separated robot counts")->delimiter(',')->required();
  bench->add_option("--cycles", cycles, "Cycles per robot count")->required()->check(CLI::PositiveNumber);
  bench->add_option("--csv", csv, "Write results as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(file);
    run.file = file;
    run.threads = threads;
    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(file, trace_file, steps, record, threads);
    if (*bench) return cmd_bench(file, robots, cycles, csv, threads);
  } catch (const std::exception& e) {
    std::cerr << "crowdsim: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
