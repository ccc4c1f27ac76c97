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

// Message passing for P cooperating ranks. There is no master: every rank
// runs the same collective code and ends with the same bits.
//
// allreduce_sum is a binomial-tree reduce to rank 0 followed by a binomial
// broadcast. At every tree node the accumulator is `own + received`, with
// children visited in a fixed order, so for a given P and per-rank inputs the
// result is bit-identical on every rank, across runs and across transports.

#ifndef DNMF_COMM_HPP_
#define DNMF_COMM_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "dnmf/error.hpp"
#include "dnmf/matrix.hpp"

namespace dnmf {

class CommError : public Error {
 public:
  using Error::Error;
};

// Ranks disagree about the call sequence or payload shapes.
class ProtocolError : public CommError {
 public:
  using CommError::CommError;
};

class TimeoutError : public CommError {
 public:
  using CommError::CommError;
};

inline constexpr std::chrono::milliseconds kDefaultCommTimeout{30000};

// Point-to-point byte mover beneath CommWorld. Messages between a pair of
// ranks are delivered in order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t rank() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::string name() const = 0;
  virtual void send(std::size_t dest, std::uint32_t tag, const Matrix& payload) = 0;
  // Blocks for the next message from `src`. Throws ProtocolError if its tag
  // differs from `tag`, TimeoutError if nothing arrives in time.
  virtual Matrix recv(std::size_t src, std::uint32_t tag) = 0;
};

struct CommStats {
  // Collectives issued by the algorithms themselves.
  std::uint64_t allreduce_calls = 0;
  std::uint64_t bytes_sent = 0;
  // Collectives issued only to observe a run (e.g. the residual norm).
  std::uint64_t instrumentation_calls = 0;
  std::uint64_t instrumentation_bytes = 0;
  std::uint64_t barrier_calls = 0;
  double comm_wall_time = 0.0;     // seconds inside collectives
  double compute_wall_time = 0.0;  // seconds reported by the caller
};

enum class Traffic { kAlgorithm, kInstrumentation };

class CommWorld {
 public:
  explicit CommWorld(std::unique_ptr<Transport> transport);

  std::size_t rank() const { return transport_->rank(); }
  std::size_t size() const { return transport_->size(); }
  std::string transport_name() const { return transport_->name(); }

  // Replaces every payload matrix with its entrywise sum over all ranks.
  // Every rank must pass the same number of matrices with the same shapes.
  // Stats: calls += 1, bytes += payload bytes * tree steps.
  void allreduce_sum(std::span<Matrix* const> payload, Traffic traffic = Traffic::kAlgorithm);
  void allreduce_sum(std::initializer_list<Matrix*> payload,
                     Traffic traffic = Traffic::kAlgorithm);
  // Convenience for one scalar.
  double allreduce_sum(double value, Traffic traffic);

  void barrier();

  // Number of point-to-point steps one collective takes: 2 * ceil(log2 P).
  std::size_t tree_steps() const;

  const CommStats& stats() const { return stats_; }
  void add_compute_time(double seconds) { stats_.compute_wall_time += seconds; }

 private:
  void reduce_broadcast(std::span<Matrix* const> payload);
  std::uint32_t tag(std::size_t part) const;

  std::unique_ptr<Transport> transport_;
  CommStats stats_;
  std::uint32_t sequence_ = 0;
};

// Shared mailboxes for ranks living as threads of one process.
class InProcessHub {
 public:
  explicit InProcessHub(std::size_t world_size,
                        std::chrono::milliseconds timeout = kDefaultCommTimeout);

  std::size_t size() const { return world_; }
  std::unique_ptr<Transport> endpoint(std::size_t rank);
  // Wakes every blocked receiver with a CommError. Used when one rank fails.
  void abort();

 private:
  friend class InProcessTransport;
  struct Envelope {
    std::uint32_t tag;
    Matrix payload;
  };
  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Envelope> queue;
  };
  Mailbox& box(std::size_t dest, std::size_t src) { return boxes_[dest * world_ + src]; }

  std::size_t world_;
  std::chrono::milliseconds timeout_;
  std::vector<Mailbox> boxes_;
  std::atomic<bool> aborted_{false};
};

// Runs fn(world) on `world_size` threads, one CommWorld each, and joins them.
// If any rank throws, the others are released and the first failure is
// rethrown here.
void run_in_process(std::size_t world_size, const std::function<void(CommWorld&)>& fn,
                    std::chrono::milliseconds timeout = kDefaultCommTimeout);

}  // namespace dnmf

#endif  // DNMF_COMM_HPP_
