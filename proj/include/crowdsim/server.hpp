#pragma once

// TCP control service. One event loop thread owns the engine and every
// session; the engine fans out internally. Commands are latched per robot
// in arrival order and consumed by the next step.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "crowdsim/engine.hpp"
#include "crowdsim/error.hpp"
#include "crowdsim/protocol.hpp"

namespace crowdsim {

enum class ServeMode { Realtime, Lockstep };

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port; see Server::port().
  std::uint16_t port = kDefaultPort;
  ServeMode mode = ServeMode::Realtime;
  double rate_hz = 10.0;
  /// Stop after this many engine steps.
  std::optional<std::uint64_t> max_steps;
  unsigned threads = 0;
  /// Called with the initial snapshot and after every step.
  std::function<void(const SimSnapshot&)> on_tick;
  /// Called before each step with the commands it will apply (tick = pre-step tick).
  std::function<void(std::uint64_t, const CommandMap&)> on_commands;
};

class Server {
 public:
  Server(ScenarioSpec spec, ServerOptions options)
      : sim_(std::move(spec), {options.threads}), options_(std::move(options)) {
    if (options_.mode == ServeMode::Realtime && !(options_.rate_hz > 0.0)) {
      throw Error("rate must be positive");
    }
    listener_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(listener_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
      ::close(listener_);
      throw Error("invalid listen address " + options_.host);
    }
    if (::bind(listener_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener_, 16) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listener_);
      throw Error("cannot listen on " + options_.host + ":" + std::to_string(options_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listener_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listener_);
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  ~Server() {
    for (auto& [_, s] : sessions_) ::close(s.fd);
    if (listener_ >= 0) ::close(listener_);
  }

  std::uint16_t port() const { return port_; }
  /// The engine; only inspect it while run() is not executing.
  const Simulation& simulation() const { return sim_; }

  /// Serve until `stop` is requested or max_steps is reached.
  void run(std::stop_token stop) {
    using Clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(options_.mode == ServeMode::Realtime ? 1.0 / options_.rate_hz : 0.0));
    auto next_tick = Clock::now() + period;
    if (options_.on_tick) options_.on_tick(sim_.snapshot());

    while (!stop.stop_requested() && !finished()) {
      int timeout_ms = 50;
      if (options_.mode == ServeMode::Realtime) {
        const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now()).count();
        timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 50));
      }
      poll_once(timeout_ms);
      if (options_.mode == ServeMode::Realtime && Clock::now() >= next_tick && !finished()) {
        advance();
        next_tick = std::max(next_tick + period, Clock::now());
      }
    }
    drain(std::chrono::seconds(2));
  }

 private:
  struct Session {
    int fd = -1;
    std::string in;
    std::string out;
    std::set<AgentId> scans;
    bool state = false;
    bool closing = false;
  };

  static constexpr std::size_t kMaxLine = 1 << 20;
  static constexpr std::size_t kMaxBacklog = 64u << 20;

  static void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

  bool finished() const { return options_.max_steps && sim_.tick() >= *options_.max_steps; }

  void poll_once(int timeout_ms) {
    std::vector<pollfd> fds{{listener_, POLLIN, 0}};
    std::vector<std::uint64_t> ids;
    for (auto& [id, s] : sessions_) {
      fds.push_back({s.fd, static_cast<short>(POLLIN | (s.out.empty() ? 0 : POLLOUT)), 0});
      ids.push_back(id);
    }
    if (::poll(fds.data(), fds.size(), timeout_ms) <= 0) return;

    if (fds[0].revents & POLLIN) accept_all();
    for (std::size_t k = 1; k < fds.size(); ++k) {
      auto it = sessions_.find(ids[k - 1]);
      if (it == sessions_.end()) continue;
      if (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) read_from(it->second);
      if (!it->second.closing || !it->second.out.empty()) flush(it->second);
    }
    reap();
  }

  void accept_all() {
    for (;;) {
      const int fd = ::accept(listener_, nullptr, nullptr);
      if (fd < 0) return;
      set_nonblocking(fd);
      const int yes = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
      sessions_[next_session_++].fd = fd;
    }
  }

  void read_from(Session& s) {
    char buf[65536];
    bool gone = false;
    for (;;) {
      const ssize_t n = ::recv(s.fd, buf, sizeof buf, 0);
      if (n > 0) {
        s.in.append(buf, static_cast<std::size_t>(n));
        continue;
      }
      gone = n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR);
      break;
    }
    // Lines that arrived before a hang-up still count (a final cmd_vel, say).
    std::size_t start = 0;
    for (std::size_t nl; !s.closing && (nl = s.in.find('\n', start)) != std::string::npos; start = nl + 1) {
      const std::string_view line(s.in.data() + start, nl - start);
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) handle(s, line);
      if (finished()) break;
    }
    s.in.erase(0, start);
    if (s.in.size() > kMaxLine) {
      send(s, ErrorMsg{"malformed", "line too long"});
      s.closing = true;
    }
    if (gone) {
      s.closing = true;
      s.out.clear();
    }
  }

  void handle(Session& s, std::string_view line) {
    WireMessage message;
    try {
      message = decode(line);
    } catch (const ProtocolError& e) {
      send(s, ErrorMsg{e.code(), e.what()});
      return;
    }
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, HelloMsg>) {
            if (m.version != kProtocolVersion) {
              send(s, ErrorMsg{"version_mismatch", "server speaks version " + std::to_string(kProtocolVersion)});
            } else {
              send(s, WelcomeMsg{kProtocolVersion, sim_.spec().name, sim_.spec().config.dt, sim_.robot_ids()});
            }
          } else if constexpr (std::is_same_v<T, SubscribeMsg>) {
            if (m.robot_id && !sim_.is_robot(*m.robot_id)) {
              send(s, unknown_robot(*m.robot_id));
            } else if (m.topic == Topic::Scan) {
              s.scans.insert(*m.robot_id);
            } else {
              s.state = true;
            }
          } else if constexpr (std::is_same_v<T, CmdVelMsg>) {
            if (!sim_.is_robot(m.robot_id)) {
              send(s, unknown_robot(m.robot_id));
            } else if (!std::isfinite(m.linear) || !std::isfinite(m.angular)) {
              send(s, ErrorMsg{"malformed", "velocities must be finite"});
            } else {
              pending_[m.robot_id] = {m.linear, m.angular, sim_.tick()};
            }
          } else if constexpr (std::is_same_v<T, StepMsg>) {
            if (options_.mode != ServeMode::Lockstep) {
              send(s, ErrorMsg{"not_lockstep", "the server steps on its own clock"});
              return;
            }
            for (std::uint64_t k = 0; k < m.n && !finished(); ++k) advance();
            send(s, SteppedMsg{sim_.tick()});
          } else if constexpr (std::is_same_v<T, ByeMsg>) {
            s.closing = true;
          } else {
            send(s, ErrorMsg{"unexpected_type", "servers do not accept this message type"});
          }
        },
        message);
  }

  static ErrorMsg unknown_robot(AgentId id) { return {"unknown_robot", "no robot with id " + std::to_string(id)}; }

  void advance() {
    bool sense = false;
    for (const auto& [_, s] : sessions_) sense = sense || !s.scans.empty();
    CommandMap commands;
    commands.swap(pending_);
    if (options_.on_commands) options_.on_commands(sim_.tick(), commands);
    sim_.step(commands, {.sense = sense});

    std::optional<std::string> state;
    for (auto& [_, s] : sessions_) {
      if (s.closing) continue;
      for (const auto& scan : sim_.latest_scans()) {
        if (s.scans.contains(scan.robot_id)) send(s, ScanMsg{scan});
      }
      if (s.state) {
        if (!state) state = encode(StateMsg{sim_.snapshot()});
        send_line(s, *state);
      }
    }
    if (options_.on_tick) options_.on_tick(sim_.snapshot());
  }

  void send(Session& s, const WireMessage& m) { send_line(s, encode(m)); }

  void send_line(Session& s, const std::string& line) {
    if (s.out.size() > kMaxBacklog) {
      // A peer that stops reading loses its session, not the server.
      s.closing = true;
      s.out.clear();
      return;
    }
    s.out += line;
    s.out += '\n';
  }

  void flush(Session& s) {
    while (!s.out.empty()) {
      const ssize_t n = ::send(s.fd, s.out.data(), s.out.size(), MSG_NOSIGNAL);
      if (n > 0) {
        s.out.erase(0, static_cast<std::size_t>(n));
      } else {
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          s.closing = true;
          s.out.clear();
        }
        return;
      }
    }
  }

  void reap() {
    std::erase_if(sessions_, [](auto& entry) {
      auto& s = entry.second;
      if (!s.closing || !s.out.empty()) return false;
      ::close(s.fd);
      return true;
    });
  }

  // Give peers a bounded chance to receive what is already queued.
  void drain(std::chrono::steady_clock::duration budget) {
    const auto deadline = std::chrono::steady_clock::now() + budget;
    for (;;) {
      std::vector<pollfd> fds;
      for (auto& [_, s] : sessions_) {
        if (!s.out.empty()) fds.push_back({s.fd, POLLOUT, 0});
      }
      if (fds.empty() || std::chrono::steady_clock::now() >= deadline) return;
      ::poll(fds.data(), fds.size(), 20);
      for (auto& [_, s] : sessions_) flush(s);
    }
  }

  Simulation sim_;
  ServerOptions options_;
  int listener_ = -1;
  std::uint16_t port_ = 0;
  std::map<std::uint64_t, Session> sessions_;
  std::uint64_t next_session_ = 0;
  CommandMap pending_;
};

}  // namespace crowdsim
