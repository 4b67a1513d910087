// Copyright 2026 The dfd Authors. All Rights Reserved.
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
//
// Stream-socket transport: a learner endpoint multiplexing any number of
// worker connections, and the worker loop. Framing comes from transport.hpp;
// each connection is single-reader single-writer with its own decoder state.

#ifndef DFD_TCP_HPP_
#define DFD_TCP_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dfd/objectives.hpp"
#include "dfd/runtime.hpp"
#include "dfd/transport.hpp"

namespace dfd {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Move-only RAII socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }

  void send_all(const std::uint8_t* data, std::size_t len) {
    std::size_t sent = 0;
    while (sent < len) {
      const ssize_t n = ::send(fd_, data + sent, len - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError("send failed: " + std::string(strerror(errno)));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  // Returns 0 on orderly shutdown.
  std::size_t recv_some(std::uint8_t* buf, std::size_t len) {
    while (true) {
      const ssize_t n = ::recv(fd_, buf, len, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError("recv failed: " + std::string(strerror(errno)));
      }
      return static_cast<std::size_t>(n);
    }
  }

  void shutdown_both() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  void close_fd() noexcept {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }
  int fd_ = -1;
};

inline Socket tcp_connect(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    throw TransportError("cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  const int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

class TcpListener {
 public:
  // port 0 binds an ephemeral port; port() reports the actual one.
  TcpListener(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("cannot create listener socket");
    const int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (host.empty() || host == "0.0.0.0") {
      addr.sin_addr.s_addr = htonl(INADDR_ANY);
    } else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw TransportError("invalid listen address: " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd_, 64) != 0) {
      ::close(fd_);
      throw TransportError("cannot bind/listen on " + host + ":" +
                           std::to_string(port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  ~TcpListener() { close(); }

  int port() const noexcept { return port_; }

  std::optional<Socket> accept() {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) return std::nullopt;  // listener closed
    const int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(fd);
  }

  void close() noexcept {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

// --- learner endpoint --------------------------------------------------------

struct TcpLearnerConfig {
  std::string host = "0.0.0.0";
  int port = 5555;
  std::chrono::milliseconds collect_timeout{60'000};
};

struct TcpRunSummary {
  std::uint64_t updates = 0;
  std::uint64_t t_total = 0;
  DropCounters drops{};
  std::vector<UpdateRecord> records;
  Vec theta;
};

// Accepts worker connections, broadcasts parameters, consumes evaluations and
// drives a LearnerCore until the timestep budget is spent. The objective is
// only used learner-side for the measured-baseline option and instrumentation
// rollouts; pass nullptr to disable both.
class TcpLearner {
 public:
  TcpLearner(RunConfig cfg, TcpLearnerConfig net, Objective* objective,
             Vec theta0)
      : cfg_(cfg),
        net_(net),
        obj_(objective),
        core_(cfg, std::move(theta0)),
        listener_(net.host, net.port),
        learner_rng_(mix64(0x11a5c0de ^ static_cast<std::uint64_t>(net.port))) {
  }

  int port() const noexcept { return listener_.port(); }
  std::size_t live_workers() const noexcept { return live_.load(); }

  TcpRunSummary run(std::ostream* log = nullptr) {
    accept_thread_ = std::thread([this] { accept_loop(); });
    if (log != nullptr) write_record_header(*log);

    TcpRunSummary out;
    try {
      while (!core_.budget_exhausted()) {
        if (cfg_.baseline_mode == BaselineMode::kMeasured && obj_ != nullptr &&
            cfg_.mode != Mode::kEs) {
          const RolloutResult r = obj_->rollout(core_.theta(), learner_rng_);
          core_.set_measured_baseline(r.reward, r.steps);
        }
        UpdateRecord rec = cfg_.mode == Mode::kEs
                               ? core_.apply_pair_batch(collect_pairs())
                               : core_.apply_batch(collect_evals());
        if (obj_ != nullptr && cfg_.eval_rollouts > 0) {
          double sum = 0.0;
          for (int i = 0; i < cfg_.eval_rollouts; ++i) {
            sum += obj_->evaluate(core_.theta(), learner_rng_).reward;
          }
          rec.eval_reward = sum / cfg_.eval_rollouts;
        }
        if (log != nullptr) write_record(*log, rec);
        out.records.push_back(std::move(rec));
        broadcast_policy();
      }
    } catch (...) {
      shutdown_all();
      throw;
    }
    shutdown_all();
    out.updates = core_.update_index();
    out.t_total = core_.t_total();
    out.drops = core_.drops();
    out.theta = core_.theta();
    return out;
  }

 private:
  struct Connection {
    Socket sock;
    std::mutex write_mu;
    std::thread reader;
    std::atomic<bool> alive{true};
    std::optional<Evaluation> pending;  // es mode: first half of a pair
    std::uint32_t node_id = 0;
  };

  void accept_loop() {
    while (true) {
      std::optional<Socket> sock = listener_.accept();
      if (!sock.has_value()) return;
      auto conn = std::make_shared<Connection>();
      conn->sock = std::move(*sock);
      {
        std::lock_guard<std::mutex> lock(conns_mu_);
        conns_.push_back(conn);
      }
      live_.fetch_add(1);
      ever_connected_.store(true);
      // Late joiners receive the newest parameters immediately.
      send_current_policy(*conn);
      conn->reader = std::thread([this, conn] { reader_loop(conn); });
    }
  }

  void send_current_policy(Connection& conn) {
    std::vector<std::uint8_t> frame;
    {
      std::lock_guard<std::mutex> lock(theta_mu_);
      frame = encode(PolicyMsg{
          static_cast<std::uint32_t>(broadcast_u_), broadcast_theta_.empty()
                                                        ? core_.theta()
                                                        : broadcast_theta_});
    }
    std::lock_guard<std::mutex> lock(conn.write_mu);
    try {
      conn.sock.send_all(frame.data(), frame.size());
    } catch (const TransportError&) {
      conn.alive.store(false);
    }
  }

  void reader_loop(std::shared_ptr<Connection> conn) {
    FrameDecoder decoder;
    std::uint8_t buf[65536];
    bool open = true;
    try {
      while (open) {
        const std::size_t n = conn->sock.recv_some(buf, sizeof(buf));
        if (n == 0) break;
        decoder.feed({buf, n});
        while (auto msg = decoder.next()) {
          if (const auto* e = std::get_if<EvalMsg>(&*msg)) {
            ingest(*conn, from_wire(*e));
          } else if (const auto* h = std::get_if<HelloMsg>(&*msg)) {
            conn->node_id = h->node_id;
          } else if (std::holds_alternative<ShutdownMsg>(*msg)) {
            open = false;
            break;
          }
          // PolicyMsg from a worker is ignored.
        }
      }
    } catch (const TransportError&) {
    } catch (const ProtocolError&) {
      // Undecodable stream: drop the connection.
    }
    if (conn->alive.exchange(false)) live_.fetch_sub(1);
    // Wake the collector so it can notice the lost worker.
    buffer_.push_wakeup();
    pair_buffer_.push_wakeup();
  }

  void ingest(Connection& conn, Evaluation eval) {
    if (cfg_.mode != Mode::kEs) {
      buffer_.push(std::move(eval));
      return;
    }
    // es: each worker sends the +eps evaluation immediately followed by the
    // -eps evaluation with the same seed.
    if (!conn.pending.has_value()) {
      conn.pending = std::move(eval);
      return;
    }
    if (conn.pending->seed != eval.seed) {
      throw ProtocolError("es pair seed mismatch");
    }
    AntitheticPair pair{*conn.pending, std::move(eval)};
    conn.pending.reset();
    pair_buffer_.push(std::move(pair));
  }

  std::vector<Evaluation> collect_evals() {
    std::vector<Evaluation> kept;
    kept.reserve(cfg_.batch_size);
    const auto deadline = std::chrono::steady_clock::now() + net_.collect_timeout;
    while (kept.size() < cfg_.batch_size) {
      const auto chunk = buffer_.take(1, std::chrono::milliseconds(100));
      if (!chunk.has_value()) {
        // Fail fast only once workers joined and all of them left again;
        // before the first connection the full timeout applies.
        if (ever_connected_.load() && live_.load() == 0 && buffer_.size() == 0) {
          throw CollectTimeout(kept.size(), cfg_.batch_size);
        }
        if (std::chrono::steady_clock::now() >= deadline) {
          throw CollectTimeout(kept.size(), cfg_.batch_size);
        }
        continue;
      }
      for (const Evaluation& e : *chunk) {
        if (core_.admissible(e)) {
          kept.push_back(e);
        } else if (cfg_.mode == Mode::kFd) {
          core_.note_discarded(e);
        } else {
          core_.note_evicted(e);
        }
      }
    }
    return kept;
  }

  std::vector<AntitheticPair> collect_pairs() {
    std::vector<AntitheticPair> kept;
    const std::size_t want = cfg_.batch_size / 2;
    kept.reserve(want);
    const auto deadline = std::chrono::steady_clock::now() + net_.collect_timeout;
    while (kept.size() < want) {
      const auto chunk = pair_buffer_.take(1, std::chrono::milliseconds(100));
      if (!chunk.has_value()) {
        if (ever_connected_.load() && live_.load() == 0 &&
            pair_buffer_.size() == 0) {
          throw CollectTimeout(2 * kept.size(), cfg_.batch_size);
        }
        if (std::chrono::steady_clock::now() >= deadline) {
          throw CollectTimeout(2 * kept.size(), cfg_.batch_size);
        }
        continue;
      }
      for (const AntitheticPair& p : *chunk) {
        if (p.plus.origin_update == core_.update_index()) {
          kept.push_back(p);
        } else {
          core_.note_discarded(p.plus);
          core_.note_discarded(p.minus);
        }
      }
    }
    return kept;
  }

  void broadcast_policy() {
    std::vector<std::uint8_t> frame;
    {
      std::lock_guard<std::mutex> lock(theta_mu_);
      broadcast_theta_ = core_.theta();
      broadcast_u_ = core_.update_index();
      frame = encode(PolicyMsg{static_cast<std::uint32_t>(broadcast_u_),
                               broadcast_theta_});
    }
    std::lock_guard<std::mutex> lock(conns_mu_);
    for (const auto& conn : conns_) {
      if (!conn->alive.load()) continue;
      std::lock_guard<std::mutex> wlock(conn->write_mu);
      try {
        conn->sock.send_all(frame.data(), frame.size());
      } catch (const TransportError&) {
        if (conn->alive.exchange(false)) live_.fetch_sub(1);
      }
    }
  }

  void shutdown_all() {
    listener_.close();
    const std::vector<std::uint8_t> bye = encode(ShutdownMsg{});
    {
      std::lock_guard<std::mutex> lock(conns_mu_);
      for (const auto& conn : conns_) {
        std::lock_guard<std::mutex> wlock(conn->write_mu);
        try {
          conn->sock.send_all(bye.data(), bye.size());
        } catch (const TransportError&) {
        }
        conn->sock.shutdown_both();
      }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::lock_guard<std::mutex> lock(conns_mu_);
    for (const auto& conn : conns_) {
      if (conn->reader.joinable()) conn->reader.join();
    }
  }

  // Disconnections are noticed by the collector on its next poll tick, so the
  // wakeup after a reader exits is a no-op.
  template <typename T>
  class PollQueue : public MsgQueue<T> {
   public:
    void push_wakeup() {}
  };

  RunConfig cfg_;
  TcpLearnerConfig net_;
  Objective* obj_;
  LearnerCore core_;
  TcpListener listener_;
  Rng learner_rng_;

  PollQueue<Evaluation> buffer_;
  PollQueue<AntitheticPair> pair_buffer_;

  std::mutex conns_mu_;
  std::vector<std::shared_ptr<Connection>> conns_;
  std::atomic<std::size_t> live_{0};
  std::atomic<bool> ever_connected_{false};
  std::thread accept_thread_;

  std::mutex theta_mu_;
  Vec broadcast_theta_;
  std::uint64_t broadcast_u_ = 0;
};

// --- worker loop -------------------------------------------------------------

struct TcpWorkerConfig {
  std::string host = "127.0.0.1";
  int port = 5555;
  std::uint32_t worker_id = 0;
  int connect_retries = 30;
  std::chrono::milliseconds retry_delay{500};
  std::uint64_t env_seed = 124;
};

struct TcpWorkerSummary {
  std::uint64_t rollouts = 0;
  std::uint64_t timesteps = 0;
};

// Connects to the learner (bounded retries), then repeatedly: snapshot the
// newest broadcast, perturb, run one full episode, transmit. A broadcast
// arriving mid-rollout is picked up only at the next rollout start; episodes
// are never aborted.
class TcpWorker {
 public:
  TcpWorker(RunConfig cfg, TcpWorkerConfig net)
      : cfg_(cfg),
        net_(net),
        env_rng_(mix64(net.env_seed ^
                       (0x77ull << 32) ^ static_cast<std::uint64_t>(net.worker_id))) {}

  TcpWorkerSummary run(Objective& objective) {
    Socket sock = connect_with_retries();
    {
      const std::vector<std::uint8_t> hello =
          encode(HelloMsg{net_.worker_id});
      sock.send_all(hello.data(), hello.size());
    }

    std::thread reader([this, &sock] { reader_loop(sock); });
    TcpWorkerSummary summary;
    try {
      while (true) {
        Snapshot snap;
        {
          std::unique_lock<std::mutex> lock(mu_);
          cv_.wait(lock, [this] { return stop_ || latest_.has_value(); });
          if (stop_) break;
          snap = *latest_;
        }
        const std::uint64_t seed = worker_seed(net_.worker_id, counter_++);
        const Vec eps = sample_noise(seed, snap.theta.size());
        if (cfg_.mode == Mode::kEs) {
          summary.timesteps +=
              run_one(sock, objective, snap, seed, eps, +1.0);
          summary.timesteps +=
              run_one(sock, objective, snap, seed, eps, -1.0);
          summary.rollouts += 2;
        } else {
          summary.timesteps += run_one(sock, objective, snap, seed, eps, +1.0);
          summary.rollouts += 1;
        }
      }
    } catch (const TransportError&) {
      // Learner went away mid-send; exit like a shutdown.
    }
    sock.shutdown_both();
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    reader.join();
    return summary;
  }

 private:
  struct Snapshot {
    Vec theta;
    std::uint64_t u = 0;
  };

  Socket connect_with_retries() {
    for (int attempt = 0;; ++attempt) {
      try {
        return tcp_connect(net_.host, net_.port);
      } catch (const TransportError&) {
        if (attempt + 1 >= net_.connect_retries) throw;
        std::this_thread::sleep_for(net_.retry_delay);
      }
    }
  }

  std::uint64_t run_one(Socket& sock, Objective& objective,
                        const Snapshot& snap, std::uint64_t seed,
                        const Vec& eps, double sign) {
    Vec alpha(snap.theta.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      alpha[i] = snap.theta[i] + sign * cfg_.sigma * eps[i];
    }
    const RolloutResult r = objective.rollout(alpha, env_rng_);
    const Evaluation eval{seed, r.reward, r.steps, snap.u};
    const std::vector<std::uint8_t> frame = encode(to_wire(eval));
    sock.send_all(frame.data(), frame.size());
    return r.steps;
  }

  void reader_loop(Socket& sock) {
    FrameDecoder decoder;
    std::uint8_t buf[65536];
    try {
      while (true) {
        const std::size_t n = sock.recv_some(buf, sizeof(buf));
        if (n == 0) break;
        decoder.feed({buf, n});
        while (auto msg = decoder.next()) {
          if (auto* p = std::get_if<PolicyMsg>(&*msg)) {
            std::lock_guard<std::mutex> lock(mu_);
            latest_ = Snapshot{std::move(p->theta), p->update_index};
            cv_.notify_all();
          } else if (std::holds_alternative<ShutdownMsg>(*msg)) {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
            cv_.notify_all();
            return;
          }
        }
      }
    } catch (const TransportError&) {
    } catch (const ProtocolError&) {
    }
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
    cv_.notify_all();
  }

  RunConfig cfg_;
  TcpWorkerConfig net_;
  Rng env_rng_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<Snapshot> latest_;
  bool stop_ = false;
  std::uint64_t counter_ = 0;
};

}  // namespace dfd

#endif  // DFD_TCP_HPP_
