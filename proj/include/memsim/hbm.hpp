#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/protocol.hpp"

namespace memsim {

struct ChannelCounters {
  std::uint64_t enqueued = 0;
  std::uint64_t rejected = 0;
  std::uint64_t serviced = 0;
  std::uint64_t busy_cycles = 0;  // cycles in which at least one request was serviced
  std::size_t peak_queue = 0;

  bool operator==(const ChannelCounters&) const = default;
};

/// Fixed-latency HBM channel: a bounded FIFO drained at a fixed number of
/// requests per cycle, each returning `latency` cycles after service.
class HbmChannel {
 public:
  HbmChannel(std::uint32_t index, const MemoryConfig& config, std::uint32_t line_size);

  bool can_accept() const { return queue_.size() < config_.channel_queue_depth; }
  /// False when the queue is full; the request then stays with its sender.
  bool try_enqueue(const MemRequest& req, Cycle now);
  /// Services queue heads and returns the responses due at `now`.
  std::vector<MemResponse> tick(Cycle now);

  std::size_t queue_size() const { return queue_.size(); }
  std::size_t in_flight() const { return in_flight_.size(); }
  bool idle() const { return queue_.empty() && in_flight_.empty(); }
  std::uint32_t index() const { return index_; }
  const ChannelCounters& counters() const { return counters_; }

 private:
  struct Queued {
    MemRequest request;
    Cycle enqueue_cycle;
  };
  struct InFlight {
    MemRequest request;
    Cycle ready_cycle;
  };

  std::uint32_t index_;
  MemoryConfig config_;
  std::uint32_t line_size_;
  std::deque<Queued> queue_;
  std::deque<InFlight> in_flight_;  // ready cycles are non-decreasing
  ChannelCounters counters_;
};

/// All channels of the device, ticked in ascending index order.
class HbmDevice {
 public:
  HbmDevice(const MemoryConfig& config, std::uint32_t line_size);

  std::uint32_t num_channels() const { return static_cast<std::uint32_t>(channels_.size()); }
  HbmChannel& channel(std::uint32_t i) { return channels_[i]; }
  const HbmChannel& channel(std::uint32_t i) const { return channels_[i]; }
  HbmChannel& channel_for(Address address);

  std::vector<MemResponse> tick(Cycle now);
  bool idle() const;

 private:
  std::uint32_t line_size_;
  std::vector<HbmChannel> channels_;
};

}  // namespace memsim
