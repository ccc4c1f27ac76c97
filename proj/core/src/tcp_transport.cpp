// Copyright 2026 The dnmf Authors. All rights reserved.
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

#include "dnmf/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "dnmf/matrix_io.hpp"

namespace dnmf {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kHelloBytes = 16;
constexpr std::size_t kFrameHeaderBytes = 12;

std::string errno_str() { return std::strerror(errno); }

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(left);
}

// Waits for `events` on fd. Returns false on deadline.
bool wait_fd(int fd, short events, Clock::time_point deadline) {
  while (true) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw CommError("poll: " + errno_str());
  }
}

void read_exact(int fd, std::uint8_t* buf, std::size_t n, Clock::time_point deadline,
                const std::string& who) {
  const auto start = Clock::now();
  std::size_t got = 0;
  while (got < n) {
    if (!wait_fd(fd, POLLIN, deadline)) {
      throw TimeoutError(who + " timed out after " + std::to_string(since(start)) + " s");
    }
    const ssize_t rc = ::recv(fd, buf + got, n - got, 0);
    if (rc == 0) throw CommError(who + ": connection closed by peer");
    if (rc < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw CommError(who + ": recv failed: " + errno_str());
    }
    got += static_cast<std::size_t>(rc);
  }
}

void write_exact(int fd, const std::uint8_t* buf, std::size_t n, Clock::time_point deadline,
                 const std::string& who) {
  const auto start = Clock::now();
  std::size_t sent = 0;
  while (sent < n) {
    if (!wait_fd(fd, POLLOUT, deadline)) {
      throw TimeoutError(who + " timed out after " + std::to_string(since(start)) + " s");
    }
    const ssize_t rc = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw CommError(who + ": send failed: " + errno_str());
    }
    sent += static_cast<std::size_t>(rc);
  }
}

in_addr resolve_ipv4(const std::string& host) {
  in_addr addr{};
  if (::inet_pton(AF_INET, host.c_str(), &addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw CommError("cannot resolve host '" + host + "'");
  }
  addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

int connect_with_retry(in_addr addr, std::uint16_t port, Clock::time_point deadline,
                       const std::string& who) {
  const auto start = Clock::now();
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw CommError("socket: " + errno_str());
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr = addr;
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
      set_nodelay(fd);
      return fd;
    }
    ::close(fd);
    if (Clock::now() >= deadline) {
      throw TimeoutError(who + " could not connect within " + std::to_string(since(start)) +
                         " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

int accept_with_deadline(int listen_fd, Clock::time_point deadline, const std::string& who) {
  const auto start = Clock::now();
  if (!wait_fd(listen_fd, POLLIN, deadline)) {
    throw TimeoutError(who + " timed out after " + std::to_string(since(start)) +
                       " s waiting for peers");
  }
  const int fd = ::accept(listen_fd, nullptr, nullptr);
  if (fd < 0) throw CommError(who + ": accept failed: " + errno_str());
  set_nodelay(fd);
  return fd;
}

struct Hello {
  std::uint32_t world = 0;
  std::uint32_t rank = 0;
  std::uint32_t port = 0;
};

void send_hello(int fd, const Hello& h, Clock::time_point deadline, const std::string& who) {
  std::vector<std::uint8_t> buf;
  put_u32(buf, kHelloMagic);
  put_u32(buf, h.world);
  put_u32(buf, h.rank);
  put_u32(buf, h.port);
  write_exact(fd, buf.data(), buf.size(), deadline, who);
}

Hello recv_hello(int fd, Clock::time_point deadline, const std::string& who) {
  std::uint8_t buf[kHelloBytes];
  read_exact(fd, buf, kHelloBytes, deadline, who);
  if (get_u32(buf) != kHelloMagic) throw ProtocolError(who + ": bad handshake magic");
  return Hello{get_u32(buf + 4), get_u32(buf + 8), get_u32(buf + 12)};
}

class TcpTransport : public Transport {
 public:
  TcpTransport(std::size_t rank, std::size_t world, std::chrono::milliseconds timeout,
               std::vector<int> fds)
      : rank_(rank), world_(world), timeout_(timeout), fds_(std::move(fds)) {}

  ~TcpTransport() override {
    for (int fd : fds_)
      if (fd >= 0) ::close(fd);
  }

  std::size_t rank() const override { return rank_; }
  std::size_t size() const override { return world_; }
  std::string name() const override { return "tcp"; }

  void send(std::size_t dest, std::uint32_t tag, const Matrix& payload) override {
    const auto frame = encode_frame(tag, payload);
    write_exact(peer(dest), frame.data(), frame.size(), Clock::now() + timeout_,
                "rank " + std::to_string(rank_) + " sending to rank " + std::to_string(dest));
  }

  Matrix recv(std::size_t src, std::uint32_t tag) override {
    const int fd = peer(src);
    const auto deadline = Clock::now() + timeout_;
    const std::string who =
        "rank " + std::to_string(rank_) + " waiting for rank " + std::to_string(src);
    std::uint8_t header[kFrameHeaderBytes];
    read_exact(fd, header, kFrameHeaderBytes, deadline, who);
    const std::uint32_t got_tag = get_u32(header);
    const std::uint64_t len = get_u64(header + 4);
    if (len < kDmatHeaderBytes || len > (std::uint64_t{1} << 40)) {
      throw ProtocolError(who + ": implausible frame length " + std::to_string(len));
    }
    std::vector<std::uint8_t> body(len);
    read_exact(fd, body.data(), body.size(), deadline, who);
    if (got_tag != tag) {
      throw ProtocolError("rank " + std::to_string(rank_) + " expected tag " +
                          std::to_string(tag) + " from rank " + std::to_string(src) +
                          ", got " + std::to_string(got_tag));
    }
    return decode_dmat(body);
  }

 private:
  int peer(std::size_t r) const {
    if (r >= world_ || r == rank_ || fds_[r] < 0) {
      throw CommError("rank " + std::to_string(rank_) + ": no connection to rank " +
                      std::to_string(r));
    }
    return fds_[r];
  }

  std::size_t rank_;
  std::size_t world_;
  std::chrono::milliseconds timeout_;
  std::vector<int> fds_;
};

// Closes collected sockets if the rendezvous fails part way.
struct FdGuard {
  std::vector<int>& fds;
  bool armed = true;
  ~FdGuard() {
    if (!armed) return;
    for (int& fd : fds)
      if (fd >= 0) ::close(fd);
  }
};

}  // namespace

TcpOptions tcp_options_from_env(TcpOptions base) {
  auto parse_count = [](const char* name, const char* text) {
    std::size_t v = 0;
    const char* end = text + std::strlen(text);
    const auto res = std::from_chars(text, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(std::string(name) + "='" + text + "' is not a non-negative integer");
    }
    return v;
  };
  if (const char* addr = std::getenv("NMF_ADDR")) {
    const std::string s(addr);
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) {
      base.host = s;
    } else {
      base.host = s.substr(0, colon);
      const std::size_t port = parse_count("NMF_ADDR port", s.c_str() + colon + 1);
      if (port > 65535) throw ConfigError("NMF_ADDR port out of range");
      base.port = static_cast<std::uint16_t>(port);
    }
  }
  if (const char* r = std::getenv("NMF_RANK")) base.rank = parse_count("NMF_RANK", r);
  if (const char* w = std::getenv("NMF_WORLD")) base.world = parse_count("NMF_WORLD", w);
  if (base.world == 0) throw ConfigError("NMF_WORLD must be >= 1");
  if (base.rank >= base.world) {
    throw ConfigError("NMF_RANK " + std::to_string(base.rank) + " is outside world of size " +
                      std::to_string(base.world));
  }
  return base;
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw CommError("socket: " + errno_str());
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr = resolve_ipv4(host);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    const std::string err = errno_str();
    ::close(fd_);
    throw CommError("bind " + host + ":" + std::to_string(port) + ": " + err);
  }
  if (::listen(fd_, SOMAXCONN) != 0) {
    const std::string err = errno_str();
    ::close(fd_);
    throw CommError("listen: " + err);
  }
  socklen_t len = sizeof(sa);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::uint8_t> encode_frame(std::uint32_t tag, const Matrix& payload) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + dmat_encoded_size(payload));
  put_u32(out, tag);
  put_u64(out, dmat_encoded_size(payload));
  encode_dmat(payload, out);
  return out;
}

std::uint32_t frame_tag(const std::vector<std::uint8_t>& frame) {
  if (frame.size() < kFrameHeaderBytes) throw ProtocolError("frame shorter than its header");
  return get_u32(frame.data());
}

std::unique_ptr<Transport> connect_tcp(const TcpOptions& opts,
                                       std::unique_ptr<TcpListener> listener) {
  const std::size_t p = opts.world;
  const std::size_t me = opts.rank;
  if (p == 0 || me >= p) throw ConfigError("connect_tcp: invalid rank/world");
  std::vector<int> fds(p, -1);
  if (p == 1) return std::make_unique<TcpTransport>(me, p, opts.timeout, std::move(fds));

  FdGuard guard{fds};
  const auto deadline = Clock::now() + opts.timeout;
  const std::string who = "rank " + std::to_string(me) + " rendezvous";
  const auto world32 = static_cast<std::uint32_t>(p);

  if (me == 0) {
    if (!listener) listener = std::make_unique<TcpListener>(opts.host, opts.port);
    std::vector<std::uint32_t> ips(p, 0), ports(p, 0);
    for (std::size_t n = 1; n < p; ++n) {
      const int fd = accept_with_deadline(listener->fd(), deadline, who);
      Hello h;
      try {
        h = recv_hello(fd, deadline, who);
      } catch (...) {
        ::close(fd);
        throw;
      }
      if (h.world != world32 || h.rank == 0 || h.rank >= p || fds[h.rank] >= 0) {
        ::close(fd);
        throw ProtocolError(who + ": peer announced rank " + std::to_string(h.rank) +
                            " of world " + std::to_string(h.world) + ", expected a new rank in [1, " +
                            std::to_string(p) + ")");
      }
      fds[h.rank] = fd;
      sockaddr_in sa{};
      socklen_t len = sizeof(sa);
      ::getpeername(fd, reinterpret_cast<sockaddr*>(&sa), &len);
      ips[h.rank] = sa.sin_addr.s_addr;
      ports[h.rank] = h.port;
    }
    std::vector<std::uint8_t> table;
    for (std::size_t r = 1; r < p; ++r) {
      put_u32(table, ips[r]);
      put_u32(table, ports[r]);
    }
    for (std::size_t r = 1; r < p; ++r) {
      send_hello(fds[r], Hello{world32, 0, 0}, deadline, who);
      write_exact(fds[r], table.data(), table.size(), deadline, who);
    }
  } else {
    TcpListener own("0.0.0.0", 0);
    fds[0] = connect_with_retry(resolve_ipv4(opts.host), opts.port, deadline, who);
    send_hello(fds[0], Hello{world32, static_cast<std::uint32_t>(me), own.port()}, deadline, who);
    const Hello ack = recv_hello(fds[0], deadline, who);
    if (ack.world != world32 || ack.rank != 0) {
      throw ProtocolError(who + ": rank 0 reports world " + std::to_string(ack.world) +
                          ", this rank expects " + std::to_string(p));
    }
    std::vector<std::uint8_t> table(8 * (p - 1));
    read_exact(fds[0], table.data(), table.size(), deadline, who);
    for (std::size_t s = 1; s < me; ++s) {
      in_addr addr{};
      addr.s_addr = get_u32(table.data() + 8 * (s - 1));
      const auto port = static_cast<std::uint16_t>(get_u32(table.data() + 8 * (s - 1) + 4));
      fds[s] = connect_with_retry(addr, port, deadline, who);
      send_hello(fds[s], Hello{world32, static_cast<std::uint32_t>(me), 0}, deadline, who);
    }
    for (std::size_t n = me + 1; n < p; ++n) {
      const int fd = accept_with_deadline(own.fd(), deadline, who);
      Hello h;
      try {
        h = recv_hello(fd, deadline, who);
      } catch (...) {
        ::close(fd);
        throw;
      }
      if (h.world != world32 || h.rank <= me || h.rank >= p || fds[h.rank] >= 0) {
        ::close(fd);
        throw ProtocolError(who + ": unexpected peer hello from rank " + std::to_string(h.rank));
      }
      fds[h.rank] = fd;
    }
  }
  guard.armed = false;
  return std::make_unique<TcpTransport>(me, p, opts.timeout, std::move(fds));
}

}  // namespace dnmf
