// Copyright 2026 The PoliFed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// TCP plumbing: framed connections, the coordinator-side transport over
// connected edge nodes, the edge client loop and the coordinator server.

#ifndef POLIFED_NET_TCP_H_
#define POLIFED_NET_TCP_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "polifed/net/edge.h"
#include "polifed/net/messages.h"
#include "polifed/net/transport.h"
#include "polifed/net/wire.h"

namespace polifed::net {

using Deadline = std::chrono::steady_clock::time_point;

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  // Throws TransportError.
  static Socket Connect(const std::string& host, std::uint16_t port);
  // Port 0 picks an ephemeral port; see local_port().
  static Socket Listen(const std::string& host, std::uint16_t port);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  std::uint16_t local_port() const;
  // Invalid socket when nothing arrives before the deadline.
  Socket Accept(Deadline deadline);
  void SendAll(std::span<const std::uint8_t> bytes);
  // Up to `cap` bytes; 0 on orderly close; nullopt at the deadline.
  std::optional<std::size_t> RecvSome(std::uint8_t* buf, std::size_t cap, Deadline deadline);
  void Shutdown();
  void Close();

 private:
  int fd_ = -1;
};

class FramedConnection {
 public:
  explicit FramedConnection(Socket sock) : sock_(std::move(sock)) {}

  // Returns the frame that was written.
  std::vector<std::uint8_t> Write(const Message& msg);
  void WriteRaw(std::span<const std::uint8_t> bytes);
  // Next message, or nullopt at the deadline. Throws TransportError when
  // the peer closes or fails, ProtocolError on a bad frame. `raw`, when
  // given, receives the complete frame bytes.
  std::optional<Message> Read(Deadline deadline, std::vector<std::uint8_t>* raw = nullptr);

  Socket& socket() { return sock_; }

 private:
  Socket sock_;
  FrameDecoder decoder_;
  std::vector<std::uint8_t> pending_;
};

// Coordinator side: routes TASKs to edge nodes that connected and sent a
// HELLO. Each connection carries its node's tasks in order; connections
// are served concurrently.
class TcpTransport : public Transport {
 public:
  ~TcpTransport() override;

  void AddEdge(std::unique_ptr<FramedConnection> conn, const std::vector<std::string>& users);
  // True once every user is hosted by a live connection.
  bool WaitForUsers(const std::vector<std::string>& users, std::chrono::milliseconds timeout);
  std::size_t num_edges() const;
  void CloseAll();

  bool Hosts(const std::string& user_id) const override;
  std::vector<ExchangeOutcome> ExchangeAll(const std::vector<Exchange>& xs,
                                           std::chrono::milliseconds timeout) override;

 private:
  struct Edge {
    std::unique_ptr<FramedConnection> conn;
    std::vector<std::string> users;
    std::mutex mu;
    std::atomic<bool> alive{true};
  };

  void Serve(Edge& edge, const std::vector<const Exchange*>& xs,
             std::vector<ExchangeOutcome*>& outs, Deadline deadline);
  std::shared_ptr<Edge> EdgeFor(const std::string& user) const;

  mutable std::mutex mu_;
  std::condition_variable changed_;
  std::map<std::string, std::shared_ptr<Edge>> by_user_;
  std::vector<std::shared_ptr<Edge>> edges_;
};

struct EdgeClientOptions {
  // Keep retrying the first connection this long.
  std::chrono::milliseconds connect_timeout{10000};
};

// Connects to the coordinator, announces the node's users and serves
// TASKs until the coordinator closes the connection or `stop` is set.
// A bad frame is answered with ERROR and the connection is re-established.
void RunEdgeClient(EdgeNode& node, const std::string& host, std::uint16_t port,
                   const std::atomic<bool>& stop, EdgeClientOptions options = {});

// Accepts edge nodes (HELLO) and submissions (SUBMIT). Submissions are
// handled one at a time and answered with FINAL or ERROR.
class CoordinatorServer {
 public:
  using SubmitHandler = std::function<FinalMessage(const SubmitMessage&, TcpTransport&)>;

  CoordinatorServer(const std::string& host, std::uint16_t port, SubmitHandler handler);
  ~CoordinatorServer();

  std::uint16_t port() const { return port_; }
  TcpTransport& transport() { return transport_; }
  void Start();
  void Stop();
  // Blocks until Stop() or `stop`.
  void Wait(const std::atomic<bool>& stop);

 private:
  void AcceptLoop();
  void HandleConnection(Socket sock);

  TcpTransport transport_;
  Socket listener_;
  std::uint16_t port_ = 0;
  SubmitHandler handler_;
  std::mutex submit_mu_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex workers_mu_;
  std::vector<std::thread> workers_;
};

// Sends SUBMIT and waits for FINAL (or ERROR, raised as Error).
FinalMessage SubmitRequest(const std::string& host, std::uint16_t port, const SubmitMessage& req,
                           std::chrono::milliseconds timeout);

}  // namespace polifed::net

#endif  // POLIFED_NET_TCP_H_
