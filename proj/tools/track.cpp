// Copyright 2026 The posetrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// track --rigs <file> --rate 24 --gate 1.0 [--listen <host:port> | --stdin]
//
// Reads DetectionMessage JSONL and writes one FusedPosition JSON line per
// fused object per tick to stdout.
//
// --stdin runs on the virtual clock of the message timestamps: tick k fires
// at k / rate once a message at or after that time arrives (or at EOF), so
// a sorted stream gives the same output as an offline run.
// --listen accepts any number of TCP producers and ticks on the wall clock,
// measured in seconds since startup.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "posetrack/error.hpp"
#include "posetrack/fusion.hpp"

namespace
{

using posetrack::fusion::DetectionMessage;
using posetrack::fusion::FusedPosition;
using posetrack::fusion::FusionTracker;

constexpr double kTimeEps = 1e-9;

std::atomic<bool> g_stop{false};
std::atomic<std::size_t> g_malformed{0};
std::mutex g_out_mutex;

void on_signal(int) { g_stop = true; }

void emit(const std::vector<FusedPosition>& positions)
{
  const std::lock_guard lock(g_out_mutex);
  for (const FusedPosition& p : positions) {
    std::cout << posetrack::fusion::to_json(p).dump() << '\n';
  }
  std::cout.flush();
}

std::optional<DetectionMessage> parse_line(const std::string& line, const std::string& origin)
{
  if (line.find_first_not_of(" \t\r") == std::string::npos) {
    return std::nullopt;
  }
  try {
    return posetrack::fusion::message_from_json(posetrack::json::parse(line));
  } catch (const posetrack::json::exception& e) {
    std::fprintf(stderr, "track: %s: malformed line: %s\n", origin.c_str(), e.what());
  } catch (const posetrack::Error& e) {
    std::fprintf(stderr, "track: %s: %s: %s\n", origin.c_str(), posetrack::to_string(e.code()), e.what());
  }
  ++g_malformed;
  return std::nullopt;
}

void ingest_or_warn(FusionTracker& tracker, DetectionMessage m, const std::string& origin)
{
  const std::string camera = m.camera_id;
  if (!tracker.ingest(std::move(m))) {
    std::fprintf(stderr, "track: %s: dropped message from camera '%s'\n", origin.c_str(), camera.c_str());
  }
}

int run_stdin(FusionTracker& tracker, std::optional<double> duration)
{
  const double rate = tracker.config().rate;
  std::int64_t k = 0;
  double last_timestamp = 0.0;
  std::string line;
  while (!g_stop && std::getline(std::cin, line)) {
    std::optional<DetectionMessage> m = parse_line(line, "stdin");
    if (!m) {
      continue;
    }
    // Ticks strictly before this message cannot see it.
    while (static_cast<double>(k) / rate < m->timestamp - kTimeEps) {
      const double t = static_cast<double>(k++) / rate;
      emit(tracker.tick(t));
    }
    last_timestamp = std::max(last_timestamp, m->timestamp);
    ingest_or_warn(tracker, std::move(*m), "stdin");
  }
  const double end = duration ? *duration : last_timestamp + 1.0 / rate;
  const std::int64_t ticks = std::llround(end * rate);
  while (k < ticks) {
    const double t = static_cast<double>(k++) / rate;
    emit(tracker.tick(t));
  }
  return 0;
}

void serve_client(int fd, std::string origin, FusionTracker& tracker)
{
  std::string pending;
  char buf[4096];
  while (!g_stop) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 200) <= 0) {
      continue;
    }
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) {
      break;
    }
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1) {
      if (auto m = parse_line(pending.substr(start, nl - start), origin)) {
        ingest_or_warn(tracker, std::move(*m), origin);
      }
    }
    pending.erase(0, start);
  }
  if (auto m = parse_line(pending, origin)) {
    ingest_or_warn(tracker, std::move(*m), origin);
  }
  ::close(fd);
}

int open_listener(const std::string& address)
{
  const std::size_t colon = address.rfind(':');
  if (colon == std::string::npos) {
    std::fprintf(stderr, "track: --listen expects host:port, got '%s'\n", address.c_str());
    return -1;
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    std::fprintf(stderr, "track: cannot resolve '%s': %s\n", address.c_str(), ::gai_strerror(rc));
    return -1;
  }
  int fd = -1;
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) {
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      break;
    }
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    std::perror("track: bind");
  }
  return fd;
}

int run_listen(FusionTracker& tracker, const std::string& address, std::optional<double> duration)
{
  const int listener = open_listener(address);
  if (listener < 0) {
    return 1;
  }
  std::fprintf(stderr, "track: listening on %s\n", address.c_str());

  const auto start = std::chrono::steady_clock::now();
  std::thread ticker([&] {
    const double rate = tracker.config().rate;
    for (std::int64_t k = 0; !g_stop; ++k) {
      const double t = static_cast<double>(k) / rate;
      if (duration && t >= *duration - kTimeEps) {
        g_stop = true;
        break;
      }
      std::this_thread::sleep_until(start + std::chrono::duration<double>(t));
      emit(tracker.tick(t));
    }
  });

  std::vector<std::thread> clients;
  while (!g_stop) {
    pollfd p{listener, POLLIN, 0};
    if (::poll(&p, 1, 200) <= 0) {
      continue;
    }
    sockaddr_storage peer{};
    socklen_t len = sizeof peer;
    const int fd = ::accept(listener, reinterpret_cast<sockaddr*>(&peer), &len);
    if (fd < 0) {
      continue;
    }
    char host[NI_MAXHOST] = "?";
    char serv[NI_MAXSERV] = "?";
    ::getnameinfo(reinterpret_cast<sockaddr*>(&peer), len, host, sizeof host, serv, sizeof serv,
                  NI_NUMERICHOST | NI_NUMERICSERV);
    clients.emplace_back(serve_client, fd, std::string(host) + ":" + serv, std::ref(tracker));
  }
  ::close(listener);
  ticker.join();
  for (std::thread& c : clients) {
    c.join();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Fuse per-camera detections into world positions"};
  std::string rigs_path;
  posetrack::fusion::TrackerConfig cfg;
  std::string listen;
  bool use_stdin = false;
  std::optional<double> duration;
  app.add_option("--rigs", rigs_path, "Rig registry JSON document")->required()->check(CLI::ExistingFile);
  app.add_option("--rate", cfg.rate, "Ticks per second")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--gate", cfg.gate, "Association gate, meters")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--staleness", cfg.staleness_ticks, "Message lifetime, ticks")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  auto* listen_opt = app.add_option("--listen", listen, "Accept JSONL producers on host:port");
  auto* stdin_opt = app.add_flag("--stdin", use_stdin, "Read JSONL from stdin on the message clock (default)");
  listen_opt->excludes(stdin_opt);
  app.add_option("--duration", duration, "Stop after this many seconds of ticks")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  int rc = 0;
  try {
    FusionTracker tracker(posetrack::fusion::load_rig_registry(rigs_path), cfg);
    rc = listen.empty() ? run_stdin(tracker, duration) : run_listen(tracker, listen, duration);
    std::fprintf(stderr, "track: %zu dropped, %zu malformed\n", tracker.dropped(), g_malformed.load());
  } catch (const posetrack::Error& e) {
    std::fprintf(stderr, "track: %s: %s\n", posetrack::to_string(e.code()), e.what());
    return 1;
  }
  return rc;
}
