#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/protocol.hpp"

namespace memsim {

enum class AccessKind : std::uint8_t { Hit, MissIssued, MissMerged, StallMshrFull, StallQueueFull };

struct AccessOutcome {
  AccessKind kind = AccessKind::Hit;
  Cycle ready_cycle = 0;  // only meaningful for Hit

  bool operator==(const AccessOutcome&) const = default;
};

struct CacheCounters {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;  // MissIssued
  std::uint64_t merges = 0;
  std::uint64_t mshr_stalls = 0;
  std::uint64_t queue_stalls = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t fills = 0;

  std::uint64_t lookups() const { return hits + misses + merges; }
  double hit_rate() const;
  CacheCounters& operator+=(const CacheCounters& other);
  bool operator==(const CacheCounters&) const = default;
};

/// A request waiting in the outgoing miss queue. It becomes visible to the
/// downstream arbiter at `ready_cycle` (after the tag lookup latency).
struct QueuedRequest {
  MemRequest request;
  Cycle ready_cycle = 0;
};

/// One independently ported slice of a set-associative cache. Write-back,
/// write-allocate, LRU. Misses are tracked in MSHRs that merge later requests
/// to the same line.
class CacheBank {
 public:
  CacheBank(const CacheLevelConfig& config, std::uint32_t bank_id, Origin level,
            const SourcePath& owner);

  // Input side: FIFO of requests routed to this bank, at most one access per
  // cycle is taken from it.
  bool can_accept() const { return input_queue_.size() < config_.queue_depth; }
  std::size_t input_space() const { return config_.queue_depth - input_queue_.size(); }
  void push_input(const MemRequest& req) { input_queue_.push_back(req); }
  bool has_input() const { return !input_queue_.empty(); }
  const MemRequest& input_head() const { return input_queue_.front(); }
  void pop_input() { input_queue_.pop_front(); }

  /// Looks `req` up at cycle `now`. On MissIssued a line request carrying a
  /// fresh id from `ids` is appended to the miss queue.
  AccessOutcome access(const MemRequest& req, Cycle now, RequestIdAllocator& ids);

  /// Installs the line for `resp`, frees its MSHR and returns the waiting
  /// requests; they complete at now + hit_latency. A dirty victim is queued
  /// as a writeback.
  std::vector<MemRequest> fill(const MemResponse& resp, Cycle now, RequestIdAllocator& ids);

  /// Pops up to `budget` ready requests from the miss queue in FIFO order.
  std::vector<MemRequest> drain_miss_queue(std::uint32_t budget, Cycle now);
  /// The miss queue head if it is ready at `now`.
  const MemRequest* miss_head(Cycle now) const;

  /// Requests this bank created (line fetches, writebacks) since the last call.
  std::vector<MemRequest> take_created() { return std::exchange(created_, {}); }

  bool contains(Address address) const;
  bool is_dirty(Address address) const;
  std::size_t mshrs_in_use() const { return mshrs_.size(); }
  std::size_t miss_queue_size() const { return miss_queue_.size(); }
  std::size_t input_queue_size() const { return input_queue_.size(); }
  bool idle() const { return input_queue_.empty() && miss_queue_.empty() && mshrs_.empty(); }

  std::uint32_t id() const { return bank_id_; }
  const CacheCounters& counters() const { return counters_; }
  const CacheLevelConfig& config() const { return config_; }

  /// Recency order of the ways of `set`, most recent first.
  std::vector<std::uint32_t> lru_order(std::uint32_t set) const;
  std::uint32_t set_of(Address address) const;

 private:
  struct Line {
    Address line_address = 0;
    bool valid = false;
    bool dirty = false;
  };
  struct Mshr {
    Address line_address = 0;
    std::vector<MemRequest> waiters;
  };

  Line* find_line(Address line_address);
  const Line* find_line(Address line_address) const;
  void touch(std::uint32_t set, std::uint32_t way);

  CacheLevelConfig config_;
  std::uint32_t bank_id_;
  Origin level_;
  SourcePath owner_;
  std::uint32_t sets_;

  std::vector<Line> lines_;            // sets_ x ways
  std::vector<std::uint32_t> recency_; // sets_ x ways, MRU first
  std::vector<Mshr> mshrs_;
  std::deque<MemRequest> input_queue_;
  std::deque<QueuedRequest> miss_queue_;
  std::vector<MemRequest> created_;
  CacheCounters counters_;
  std::optional<Cycle> last_access_;
};

/// A cache level instance: `num_banks` banks selected by line-interleaved
/// address hashing.
class BankedCache {
 public:
  BankedCache(const CacheLevelConfig& config, Origin level, const SourcePath& owner,
              std::string name);

  std::uint32_t num_banks() const { return static_cast<std::uint32_t>(banks_.size()); }
  CacheBank& bank(std::uint32_t index) { return banks_[index]; }
  const CacheBank& bank(std::uint32_t index) const { return banks_[index]; }
  CacheBank& bank_for(Address address);
  std::uint32_t bank_of(Address address) const;

  const std::string& name() const { return name_; }
  Origin level() const { return level_; }
  const CacheLevelConfig& config() const { return config_; }
  CacheCounters counters() const;
  bool idle() const;

 private:
  CacheLevelConfig config_;
  Origin level_;
  std::string name_;
  std::vector<CacheBank> banks_;
};

}  // namespace memsim
