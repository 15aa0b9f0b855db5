#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/protocol.hpp"

namespace memsim {

struct Instruction {
  enum class Kind : std::uint8_t { Compute, Load, Store };

  Kind kind = Kind::Compute;
  std::uint32_t duration = 1;       // Compute only
  std::vector<Address> addresses;   // Load/Store: one per thread

  static Instruction compute(std::uint32_t cycles = 1) { return {Kind::Compute, cycles, {}}; }
  static Instruction load(std::vector<Address> a) { return {Kind::Load, 1, std::move(a)}; }
  static Instruction store(std::vector<Address> a) { return {Kind::Store, 1, std::move(a)}; }

  bool is_memory() const { return kind != Kind::Compute; }
  bool operator==(const Instruction&) const = default;
};

using Program = std::vector<Instruction>;

/// Distinct line addresses touched by `addresses`, in first-occurrence order.
std::vector<Address> coalesce_lines(std::span<const Address> addresses, std::uint32_t line_size);

/// Memory coalescer: one line request per distinct line, ids drawn from `ids`.
std::vector<MemRequest> coalesce(std::span<const Address> addresses, std::uint32_t line_size,
                                 bool is_write, const SourcePath& source, RequestIdAllocator& ids,
                                 Cycle now);

enum class WarpStatus : std::uint8_t { Ready, Busy, WaitingMem, Finished };

struct WarpState {
  std::uint32_t id = 0;
  std::size_t pc = 0;
  WarpStatus status = WarpStatus::Ready;
  Cycle busy_until = 0;                  // Busy: ready again at this cycle
  std::vector<RequestId> outstanding;    // WaitingMem: load responses still due
  std::uint64_t retired = 0;
};

/// Round-robin pick of the first ready warp after `last`. Busy warps whose
/// compute latency has elapsed at `now` count as ready.
std::optional<std::uint32_t> schedule_warp(std::span<const WarpState> warps,
                                           std::optional<std::uint32_t> last, Cycle now);

/// Core-side view of the L1. Implementations accept either all requests of
/// an instruction or none of them.
class LsuPort {
 public:
  virtual ~LsuPort() = default;
  virtual bool try_issue(std::span<const MemRequest> requests) = 0;
  virtual bool try_fetch(const MemRequest& request) = 0;
};

struct CoreCounters {
  std::uint64_t retired = 0;
  std::uint64_t issued_requests = 0;
  std::uint64_t memory_instructions = 0;
  std::uint64_t thread_accesses = 0;    // per-thread addresses before coalescing
  std::uint64_t port_stall_cycles = 0;  // memory instruction rejected by the L1
  std::uint64_t idle_cycles = 0;        // no warp ready
  std::uint64_t icache_fetches = 0;

  double coalescing_ratio() const;
  CoreCounters& operator+=(const CoreCounters& other);
  bool operator==(const CoreCounters&) const = default;
};

struct StepResult {
  std::uint64_t retired = 0;
  std::vector<MemRequest> issued;
};

/// Synthetic SIMT core: round-robin warp scheduler, single issue per cycle,
/// in-order warps. Loads block their warp until every line returns; stores
/// retire as soon as the L1 accepts them.
class Core {
 public:
  Core(const SourcePath& where, std::vector<Program> programs, std::uint32_t line_size,
       const CoreConfig& config);

  StepResult step(Cycle now, LsuPort& port, RequestIdAllocator& ids);
  /// Delivers a load response. Returns true when it retired the load.
  bool on_response(RequestId id, Cycle now);

  bool finished() const;
  std::span<const WarpState> warps() const { return warps_; }
  const CoreCounters& counters() const { return counters_; }
  const SourcePath& where() const { return where_; }
  std::uint64_t program_length() const;

 private:
  SourcePath where_;
  std::vector<Program> programs_;
  std::vector<WarpState> warps_;
  std::uint32_t line_size_;
  CoreConfig config_;
  std::optional<std::uint32_t> last_scheduled_;
  std::uint64_t retired_since_fetch_ = 0;
  bool fetch_pending_ = false;
  std::uint64_t fetch_seq_ = 0;
  CoreCounters counters_;
};

/// Instruction fetches go to a code region far above any data footprint.
inline constexpr Address kCodeBase = Address{1} << 40;

}  // namespace memsim
