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

#include "polifed/net/tcp.h"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>

namespace polifed::net {
namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

[[noreturn]] void SysFail(const std::string& what) {
  Fail(ErrorCode::kTransport, what + ": " + std::strerror(errno));
}

int RemainingMs(Deadline deadline) {
  auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - Clock::now()).count();
  if (left < 0) return 0;
  return left > 1000000 ? 1000000 : static_cast<int>(left);
}

// Waits for `events` on fd; false at the deadline.
bool PollFor(int fd, short events, Deadline deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    int r = ::poll(&p, 1, RemainingMs(deadline));
    if (r > 0) return true;
    if (r == 0) {
      if (Clock::now() >= deadline) return false;
      continue;
    }
    if (errno != EINTR) SysFail("poll");
  }
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) ::freeaddrinfo(head);
  }
};

AddrInfo Resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo ai;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &ai.head);
  if (rc != 0) {
    Fail(ErrorCode::kTransport, "cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  return ai;
}

std::string UserOf(const Message& m) {
  auto it = m.body.find("user_id");
  return it != m.body.end() && it->is_string() ? it->get<std::string>() : std::string();
}

}  // namespace

Socket::~Socket() { Close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    Close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Socket Socket::Connect(const std::string& host, std::uint16_t port) {
  AddrInfo ai = Resolve(host, port, false);
  int last_errno = 0;
  for (addrinfo* a = ai.head; a; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
    if (!s.valid()) {
      last_errno = errno;
      continue;
    }
    if (::connect(s.fd_, a->ai_addr, a->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_errno = errno;
  }
  errno = last_errno;
  SysFail("connect to " + host + ":" + std::to_string(port));
}

Socket Socket::Listen(const std::string& host, std::uint16_t port) {
  AddrInfo ai = Resolve(host, port, true);
  for (addrinfo* a = ai.head; a; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd_, a->ai_addr, a->ai_addrlen) == 0 && ::listen(s.fd_, 128) == 0) return s;
  }
  SysFail("listen on port " + std::to_string(port));
}

std::uint16_t Socket::local_port() const {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0) SysFail("getsockname");
  if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
  return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
}

Socket Socket::Accept(Deadline deadline) {
  if (!PollFor(fd_, POLLIN, deadline)) return Socket();
  int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) return Socket();
    SysFail("accept");
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

void Socket::SendAll(std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      SysFail("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::size_t> Socket::RecvSome(std::uint8_t* buf, std::size_t cap, Deadline deadline) {
  for (;;) {
    if (!PollFor(fd_, POLLIN, deadline)) return std::nullopt;
    ssize_t n = ::recv(fd_, buf, cap, 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno != EINTR && errno != EAGAIN) SysFail("recv");
  }
}

void Socket::Shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::vector<std::uint8_t> FramedConnection::Write(const Message& msg) {
  std::vector<std::uint8_t> frame = EncodeFrame(msg);
  sock_.SendAll(frame);
  return frame;
}

void FramedConnection::WriteRaw(std::span<const std::uint8_t> bytes) { sock_.SendAll(bytes); }

std::optional<Message> FramedConnection::Read(Deadline deadline, std::vector<std::uint8_t>* raw) {
  for (;;) {
    if (pending_.size() >= kFrameHeaderBytes) {
      std::size_t n = (std::size_t{pending_[0]} << 24) | (std::size_t{pending_[1]} << 16) |
                      (std::size_t{pending_[2]} << 8) | std::size_t{pending_[3]};
      if (n > kMaxPayloadBytes) {
        Fail(ErrorCode::kProtocol, "frame length " + std::to_string(n) + " over limit");
      }
      if (pending_.size() >= kFrameHeaderBytes + n) {
        std::vector<std::uint8_t> frame(pending_.begin(),
                                        pending_.begin() + static_cast<long>(kFrameHeaderBytes + n));
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(frame.size()));
        Message m = DecodePayload(std::span(frame).subspan(kFrameHeaderBytes));
        if (raw) *raw = std::move(frame);
        return m;
      }
    }
    std::uint8_t buf[65536];
    std::optional<std::size_t> got = sock_.RecvSome(buf, sizeof buf, deadline);
    if (!got) return std::nullopt;
    if (*got == 0) {
      Fail(ErrorCode::kTransport, pending_.empty() ? "connection closed by peer"
                                                   : "connection closed mid-frame");
    }
    pending_.insert(pending_.end(), buf, buf + *got);
  }
}

TcpTransport::~TcpTransport() { CloseAll(); }

void TcpTransport::AddEdge(std::unique_ptr<FramedConnection> conn,
                           const std::vector<std::string>& users) {
  auto edge = std::make_shared<Edge>();
  edge->conn = std::move(conn);
  edge->users = users;
  {
    std::lock_guard lock(mu_);
    for (const auto& u : users) {
      auto it = by_user_.find(u);
      if (it != by_user_.end() && it->second->alive) {
        Fail(ErrorCode::kInvalidArgument, "user '" + u + "' already connected");
      }
    }
    for (const auto& u : users) by_user_[u] = edge;
    edges_.push_back(edge);
  }
  changed_.notify_all();
}

bool TcpTransport::WaitForUsers(const std::vector<std::string>& users,
                                std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return changed_.wait_for(lock, timeout, [&] {
    for (const auto& u : users) {
      auto it = by_user_.find(u);
      if (it == by_user_.end() || !it->second->alive) return false;
    }
    return true;
  });
}

std::size_t TcpTransport::num_edges() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : edges_) n += e->alive ? 1 : 0;
  return n;
}

void TcpTransport::CloseAll() {
  std::lock_guard lock(mu_);
  for (auto& e : edges_) {
    e->alive = false;
    e->conn->socket().Shutdown();
  }
}

bool TcpTransport::Hosts(const std::string& user_id) const {
  auto e = EdgeFor(user_id);
  return e && e->alive;
}

std::shared_ptr<TcpTransport::Edge> TcpTransport::EdgeFor(const std::string& user) const {
  std::lock_guard lock(mu_);
  auto it = by_user_.find(user);
  return it == by_user_.end() ? nullptr : it->second;
}

void TcpTransport::Serve(Edge& edge, const std::vector<const Exchange*>& xs,
                         std::vector<ExchangeOutcome*>& outs, Deadline deadline) {
  std::lock_guard lock(edge.mu);
  std::string lost = "connection lost";
  std::map<std::pair<int, std::string>, std::size_t> pending;
  std::vector<Clock::time_point> sent(xs.size());
  std::size_t n_sent = 0;
  if (edge.alive) {
    try {
      for (; n_sent < xs.size(); ++n_sent) {
        const Exchange& x = *xs[n_sent];
        auto t0 = Clock::now();
        std::vector<std::uint8_t> frame = edge.conn->Write(x.task);
        sent[n_sent] = Clock::now();
        Tap(Direction::kToNode, x.user_id, frame);
        outs[n_sent]->ttd_ms = Ms(sent[n_sent] - t0);
        pending[{x.task.body.value("round", 0), x.user_id}] = n_sent;
      }
    } catch (const Error& e) {
      edge.alive = false;
      lost = e.what();
    }
  }
  while (edge.alive && !pending.empty()) {
    std::optional<Message> m;
    std::vector<std::uint8_t> raw;
    try {
      m = edge.conn->Read(deadline, &raw);
    } catch (const Error& e) {
      edge.alive = false;
      lost = e.what();
      break;
    }
    if (!m) break;
    Tap(Direction::kFromNode, UserOf(*m), raw);
    auto it = pending.end();
    if (m->kind == MessageKind::kResult) {
      it = pending.find({m->body.value("round", -1), UserOf(*m)});
    } else if (m->kind == MessageKind::kError) {
      it = std::min_element(pending.begin(), pending.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    if (it == pending.end()) continue;
    ExchangeOutcome& o = *outs[it->second];
    o.reply = std::move(*m);
    o.wait_ms = Ms(Clock::now() - sent[it->second]);
    pending.erase(it);
  }
  for (const auto& [key, i] : pending) {
    outs[i]->code = ErrorCode::kTransport;
    outs[i]->detail = edge.alive ? "timed out" : lost;
  }
  for (std::size_t i = n_sent; i < xs.size(); ++i) {
    outs[i]->code = ErrorCode::kTransport;
    outs[i]->detail = lost;
  }
  if (!edge.alive) {
    edge.conn->socket().Shutdown();
    std::lock_guard l(mu_);
    for (const auto& u : edge.users) {
      auto it = by_user_.find(u);
      if (it != by_user_.end() && it->second.get() == &edge) by_user_.erase(it);
    }
  }
}

std::vector<ExchangeOutcome> TcpTransport::ExchangeAll(const std::vector<Exchange>& xs,
                                                       std::chrono::milliseconds timeout) {
  Deadline deadline = Clock::now() + timeout;
  std::vector<ExchangeOutcome> out(xs.size());
  std::map<Edge*, std::pair<std::shared_ptr<Edge>, std::vector<std::size_t>>> plan;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto e = EdgeFor(xs[i].user_id);
    if (!e) {
      out[i].detail = "no node hosts '" + xs[i].user_id + "'";
      continue;
    }
    auto& slot = plan[e.get()];
    slot.first = e;
    slot.second.push_back(i);
  }
  std::vector<std::thread> workers;
  for (auto& [ptr, entry] : plan) {
    workers.emplace_back([this, &xs, &out, deadline, &entry = entry] {
      std::vector<const Exchange*> mine;
      std::vector<ExchangeOutcome*> outs;
      for (std::size_t i : entry.second) {
        mine.push_back(&xs[i]);
        outs.push_back(&out[i]);
      }
      Serve(*entry.first, mine, outs, deadline);
    });
  }
  for (auto& w : workers) w.join();
  return out;
}

namespace {

Socket ConnectWithRetry(const std::string& host, std::uint16_t port,
                        std::chrono::milliseconds timeout, const std::atomic<bool>& stop) {
  auto until = Clock::now() + timeout;
  for (;;) {
    try {
      return Socket::Connect(host, port);
    } catch (const Error&) {
      if (Clock::now() >= until || stop) throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace

void RunEdgeClient(EdgeNode& node, const std::string& host, std::uint16_t port,
                   const std::atomic<bool>& stop, EdgeClientOptions options) {
  Socket sock = ConnectWithRetry(host, port, options.connect_timeout, stop);
  while (!stop) {
    FramedConnection conn(std::move(sock));
    conn.Write(HelloMessage{node.user_ids()}.ToMessage());
    bool reconnect = false;
    while (!stop) {
      try {
        std::optional<Message> m =
            conn.Read(Clock::now() + std::chrono::milliseconds(200));
        if (!m) continue;
        conn.Write(node.Handle(*m));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kProtocol) return;
        try {
          conn.Write(ErrorMessage{e.code(), e.what()}.ToMessage());
        } catch (const Error&) {
        }
        reconnect = true;
        break;
      }
    }
    if (!reconnect) return;
    conn.socket().Close();
    sock = ConnectWithRetry(host, port, options.connect_timeout, stop);
  }
}

CoordinatorServer::CoordinatorServer(const std::string& host, std::uint16_t port,
                                     SubmitHandler handler)
    : listener_(Socket::Listen(host, port)), handler_(std::move(handler)) {
  port_ = listener_.local_port();
}

CoordinatorServer::~CoordinatorServer() { Stop(); }

void CoordinatorServer::Start() {
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

void CoordinatorServer::Stop() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  transport_.CloseAll();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void CoordinatorServer::Wait(const std::atomic<bool>& stop) {
  while (!stop && !stopping_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void CoordinatorServer::AcceptLoop() {
  while (!stopping_) {
    Socket s;
    try {
      s = listener_.Accept(Clock::now() + std::chrono::milliseconds(100));
    } catch (const Error&) {
      continue;
    }
    if (!s.valid()) continue;
    std::lock_guard lock(workers_mu_);
    workers_.emplace_back([this, sock = std::move(s)]() mutable { HandleConnection(std::move(sock)); });
  }
}

void CoordinatorServer::HandleConnection(Socket sock) {
  auto conn = std::make_unique<FramedConnection>(std::move(sock));
  try {
    std::optional<Message> first = conn->Read(Clock::now() + std::chrono::seconds(10));
    if (!first) return;
    if (first->kind == MessageKind::kHello) {
      HelloMessage hello = HelloMessage::FromMessage(*first);
      transport_.AddEdge(std::move(conn), hello.users);
      return;
    }
    if (first->kind != MessageKind::kSubmit) {
      Fail(ErrorCode::kProtocol,
           std::string("expected HELLO or SUBMIT, got ") + MessageKindName(first->kind));
    }
    SubmitMessage req = SubmitMessage::FromMessage(*first);
    FinalMessage fin;
    {
      std::lock_guard lock(submit_mu_);
      fin = handler_(req, transport_);
    }
    conn->Write(fin.ToMessage());
  } catch (const Error& e) {
    try {
      if (conn) conn->Write(ErrorMessage{e.code(), e.what()}.ToMessage());
    } catch (const Error&) {
    }
  }
}

FinalMessage SubmitRequest(const std::string& host, std::uint16_t port, const SubmitMessage& req,
                           std::chrono::milliseconds timeout) {
  FramedConnection conn(Socket::Connect(host, port));
  conn.Write(req.ToMessage());
  std::optional<Message> m = conn.Read(Clock::now() + timeout);
  if (!m) Fail(ErrorCode::kTransport, "no reply from coordinator before the timeout");
  if (m->kind == MessageKind::kError) {
    ErrorMessage e = ErrorMessage::FromMessage(*m);
    Fail(e.code, e.detail);
  }
  return FinalMessage::FromMessage(*m);
}

}  // namespace polifed::net
