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

// TCP transport.
//
// Rendezvous: rank 0 listens on the configured address. Every other rank
// opens its own listener on an ephemeral port, connects to rank 0 and sends
//
//   hello = [u32 magic "NMFH"][u32 world size][u32 rank][u32 listen port]
//
// all little-endian. Rank 0 checks world size and rank uniqueness, answers
// each peer with its own hello followed by a peer table of (P - 1) entries
// [u32 IPv4 in network order][u32 port] for ranks 1..P-1. Rank r then
// connects to every rank s in [1, r) and sends a hello; rank s accepts one
// connection from every rank above it. The result is one socket per pair.
//
// Data frames: [u32 tag][u64 byte length][DMAT1 body], little-endian.

#ifndef DNMF_TCP_TRANSPORT_HPP_
#define DNMF_TCP_TRANSPORT_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dnmf/comm.hpp"

namespace dnmf {

inline constexpr std::uint32_t kHelloMagic = 0x48464d4e;  // bytes "NMFH"
inline constexpr std::uint16_t kDefaultPort = 29500;

struct TcpOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;
  std::size_t rank = 0;
  std::size_t world = 1;
  std::chrono::milliseconds timeout = kDefaultCommTimeout;
};

// Reads NMF_ADDR ("host:port"), NMF_RANK and NMF_WORLD. Missing variables
// keep the defaults in `base`; malformed ones throw ConfigError.
TcpOptions tcp_options_from_env(TcpOptions base = {});

// Bound, listening IPv4 socket. Port 0 picks an ephemeral port.
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Performs the rendezvous and returns a connected transport. Rank 0 uses
// `listener` if given, otherwise binds opts.host:opts.port itself.
std::unique_ptr<Transport> connect_tcp(const TcpOptions& opts,
                                       std::unique_ptr<TcpListener> listener = nullptr);

// Frame codec, exposed for tests of the wire format.
std::vector<std::uint8_t> encode_frame(std::uint32_t tag, const Matrix& payload);
std::uint32_t frame_tag(const std::vector<std::uint8_t>& frame);

}  // namespace dnmf

#endif  // DNMF_TCP_TRANSPORT_HPP_
