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

#include "dnmf/comm.hpp"

#include <exception>
#include <thread>

namespace dnmf {

namespace {

using Clock = std::chrono::steady_clock;

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Smallest power of two >= n.
std::size_t ceil_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

CommWorld::CommWorld(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw CommError("CommWorld: null transport");
}

std::size_t CommWorld::tree_steps() const {
  std::size_t steps = 0;
  for (std::size_t p = 1; p < size(); p <<= 1) ++steps;
  return 2 * steps;
}

std::uint32_t CommWorld::tag(std::size_t part) const {
  return (sequence_ << 8) | static_cast<std::uint32_t>(part & 0xff);
}

void CommWorld::reduce_broadcast(std::span<Matrix* const> payload) {
  const std::size_t p = size();
  const std::size_t me = rank();
  if (payload.size() > 256) throw CommError("allreduce: more than 256 payload parts");

  // Reduce: at step `mask`, ranks with that bit set hand their partial sum
  // to rank - mask and drop out.
  for (std::size_t mask = 1; mask < p; mask <<= 1) {
    if (me & mask) {
      for (std::size_t k = 0; k < payload.size(); ++k) transport_->send(me - mask, tag(k), *payload[k]);
      break;
    }
    const std::size_t child = me + mask;
    if (child >= p) continue;
    for (std::size_t k = 0; k < payload.size(); ++k) {
      Matrix in = transport_->recv(child, tag(k));
      Matrix& acc = *payload[k];
      if (in.rows() != acc.rows() || in.cols() != acc.cols()) {
        throw ProtocolError("allreduce part " + std::to_string(k) + ": rank " +
                            std::to_string(me) + " holds " + shape_str(acc) + " but rank " +
                            std::to_string(child) + " sent " + shape_str(in));
      }
      acc += in;
    }
  }

  // Broadcast down the same tree.
  std::size_t span = ceil_pow2(p);
  if (me != 0) {
    span = me & (~me + 1);  // lowest set bit
    for (std::size_t k = 0; k < payload.size(); ++k) {
      Matrix in = transport_->recv(me - span, tag(k));
      if (in.rows() != payload[k]->rows() || in.cols() != payload[k]->cols()) {
        throw ProtocolError("allreduce broadcast part " + std::to_string(k) + ": rank " +
                            std::to_string(me) + " holds " + shape_str(*payload[k]) +
                            " but rank " + std::to_string(me - span) + " sent " +
                            shape_str(in));
      }
      *payload[k] = std::move(in);
    }
  }
  for (std::size_t mask = span >> 1; mask >= 1; mask >>= 1) {
    if (me + mask < p)
      for (std::size_t k = 0; k < payload.size(); ++k) transport_->send(me + mask, tag(k), *payload[k]);
  }
  ++sequence_;
}

void CommWorld::allreduce_sum(std::span<Matrix* const> payload, Traffic traffic) {
  const auto start = Clock::now();
  reduce_broadcast(payload);
  std::uint64_t bytes = 0;
  for (const Matrix* m : payload) bytes += m->size() * sizeof(double);
  bytes *= tree_steps();
  if (traffic == Traffic::kAlgorithm) {
    ++stats_.allreduce_calls;
    stats_.bytes_sent += bytes;
  } else {
    ++stats_.instrumentation_calls;
    stats_.instrumentation_bytes += bytes;
  }
  stats_.comm_wall_time += std::chrono::duration<double>(Clock::now() - start).count();
}

void CommWorld::allreduce_sum(std::initializer_list<Matrix*> payload, Traffic traffic) {
  allreduce_sum(std::span<Matrix* const>(payload.begin(), payload.size()), traffic);
}

double CommWorld::allreduce_sum(double value, Traffic traffic) {
  Matrix m(1, 1, value);
  allreduce_sum({&m}, traffic);
  return m(0, 0);
}

void CommWorld::barrier() {
  const auto start = Clock::now();
  Matrix token(1, 1);
  Matrix* parts[] = {&token};
  reduce_broadcast(parts);
  ++stats_.barrier_calls;
  stats_.comm_wall_time += std::chrono::duration<double>(Clock::now() - start).count();
}

class InProcessTransport : public Transport {
 public:
  InProcessTransport(InProcessHub& hub, std::size_t rank) : hub_(hub), rank_(rank) {}

  std::size_t rank() const override { return rank_; }
  std::size_t size() const override { return hub_.size(); }
  std::string name() const override { return "in-process"; }

  void send(std::size_t dest, std::uint32_t tag, const Matrix& payload) override {
    if (dest >= hub_.size()) throw CommError("send: rank " + std::to_string(dest) + " out of range");
    auto& box = hub_.box(dest, rank_);
    {
      std::lock_guard<std::mutex> lock(box.mu);
      box.queue.push_back({tag, payload});
    }
    box.cv.notify_one();
  }

  Matrix recv(std::size_t src, std::uint32_t tag) override {
    if (src >= hub_.size()) throw CommError("recv: rank " + std::to_string(src) + " out of range");
    auto& box = hub_.box(rank_, src);
    const auto start = Clock::now();
    std::unique_lock<std::mutex> lock(box.mu);
    const bool ready = box.cv.wait_for(lock, hub_.timeout_, [&] {
      return !box.queue.empty() || hub_.aborted_.load();
    });
    if (!box.queue.empty()) {
      InProcessHub::Envelope env = std::move(box.queue.front());
      box.queue.pop_front();
      if (env.tag != tag) {
        throw ProtocolError("rank " + std::to_string(rank_) + " expected tag " +
                            std::to_string(tag) + " from rank " + std::to_string(src) +
                            ", got " + std::to_string(env.tag));
      }
      return std::move(env.payload);
    }
    if (ready) throw CommError("rank " + std::to_string(rank_) + ": world aborted");
    const double waited = std::chrono::duration<double>(Clock::now() - start).count();
    throw TimeoutError("rank " + std::to_string(rank_) + " timed out after " +
                       std::to_string(waited) + " s waiting for rank " + std::to_string(src));
  }

 private:
  InProcessHub& hub_;
  std::size_t rank_;
};

InProcessHub::InProcessHub(std::size_t world_size, std::chrono::milliseconds timeout)
    : world_(world_size), timeout_(timeout), boxes_(world_size * world_size) {
  if (world_size == 0) throw CommError("InProcessHub: world size must be >= 1");
}

std::unique_ptr<Transport> InProcessHub::endpoint(std::size_t rank) {
  if (rank >= world_) throw CommError("InProcessHub: rank " + std::to_string(rank) + " out of range");
  return std::make_unique<InProcessTransport>(*this, rank);
}

void InProcessHub::abort() {
  aborted_.store(true);
  for (auto& b : boxes_) {
    std::lock_guard<std::mutex> lock(b.mu);
    b.cv.notify_all();
  }
}

void run_in_process(std::size_t world_size, const std::function<void(CommWorld&)>& fn,
                    std::chrono::milliseconds timeout) {
  InProcessHub hub(world_size, timeout);
  std::mutex err_mu;
  std::exception_ptr first;
  auto body = [&](std::size_t r) {
    try {
      CommWorld world(hub.endpoint(r));
      fn(world);
    } catch (...) {
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first) first = std::current_exception();
      }
      hub.abort();
    }
  };
  if (world_size == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(world_size);
    for (std::size_t r = 0; r < world_size; ++r) threads.emplace_back(body, r);
    for (auto& t : threads) t.join();
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace dnmf
