#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/config.hpp"

namespace memsim {

enum class InterconnectErrc { PolicyMisuse, GroupIndivisible };

class InterconnectError : public std::logic_error {
 public:
  InterconnectError(InterconnectErrc code, const std::string& what)
      : std::logic_error(what), code_(code) {}
  InterconnectErrc code() const noexcept { return code_; }

 private:
  InterconnectErrc code_;
};

/// Per-input arbitration request: the output the input's head request wants,
/// or kNoDemand. Positional policies only look at presence.
using Demand = std::uint32_t;
inline constexpr Demand kNoDemand = std::numeric_limits<Demand>::max();

struct Grant {
  std::uint32_t input = 0;
  std::uint32_t output = 0;

  bool operator==(const Grant&) const = default;
};

/// Grants issued in one cycle, ordered by input index.
struct GrantSet {
  std::vector<Grant> grants;

  std::size_t size() const { return grants.size(); }
  bool empty() const { return grants.empty(); }
  /// One grant per input, one per output, all indices in range.
  bool is_legal(std::uint32_t num_inputs, std::uint32_t num_outputs) const;

  bool operator==(const GrantSet&) const = default;
};

struct ArbiterState {
  ArbitrationPolicy policy = ArbitrationPolicy::Direct;
  std::uint32_t num_inputs = 0;
  std::uint32_t num_outputs = 0;
  std::uint32_t num_groups = 1;
  bool strict_time_slice = false;

  std::uint32_t rr_group_pointer = 0;
  std::vector<std::uint32_t> rr_per_output_pointers;
  std::uint32_t rr_window_offset = 0;

  bool operator==(const ArbiterState&) const = default;
};

/// Builds a fresh state and checks the policy's structural preconditions:
/// Direct needs equal port counts, source round-robin needs the inputs to
/// split into blocks of `num_outputs`, and distributed round-robin needs both
/// port counts divisible by `num_groups`.
ArbiterState make_arbiter_state(ArbitrationPolicy policy, std::uint32_t num_inputs,
                                std::uint32_t num_outputs, std::uint32_t num_groups = 1,
                                bool strict_time_slice = false);

// Input i -> output i for every pending input.
GrantSet arbitrate_direct(std::span<const Demand> pending, std::uint32_t num_outputs);

// Arb-A. Every output independently picks, among the inputs demanding it,
// the first one at or after its round-robin pointer, then moves the pointer
// one past the winner.
GrantSet arbitrate_crossbar(std::span<const Demand> pending, ArbiterState& state);

// Arb-B. Inputs form num_inputs / num_outputs contiguous source blocks of
// num_outputs ports. One block per cycle owns all outputs (block port j ->
// output j). Idle blocks are skipped unless strict_time_slice is set.
GrantSet arbitrate_source_rr(std::span<const Demand> pending, ArbiterState& state);

// Arb-C. Each of the num_groups source groups owns a fixed slice of
// W = num_outputs / num_groups outputs. A window of W consecutive ports per
// group rotates by W every cycle; ports outside the window wait.
GrantSet arbitrate_distributed_rr(std::span<const Demand> pending, ArbiterState& state);

GrantSet arbitrate(std::span<const Demand> pending, ArbiterState& state);

struct ArbiterCounters {
  std::vector<std::uint64_t> grants_per_input;
  std::vector<std::uint64_t> grants_per_output;
  std::uint64_t stall_cycles = 0;  // input-cycles spent pending without a grant
  std::uint64_t busy_cycles = 0;   // cycles with at least one grant

  std::uint64_t total_grants() const;
};

/// Arbiter for one port boundary. When input and output counts match the
/// ports are wired straight through and the configured policy is unused.
class Arbiter {
 public:
  Arbiter() = default;
  Arbiter(ArbitrationPolicy policy, const BoundaryShape& shape, bool strict_time_slice = false);

  GrantSet arbitrate(std::span<const Demand> pending);
  /// Withdraws a grant the downstream side could not accept.
  void revoke(const Grant& grant);

  const ArbiterState& state() const { return state_; }
  const ArbiterCounters& counters() const { return counters_; }
  std::uint32_t num_inputs() const { return state_.num_inputs; }
  std::uint32_t num_outputs() const { return state_.num_outputs; }

 private:
  ArbiterState state_;
  ArbiterCounters counters_;
};

enum class L1Owner : std::uint8_t { None, ICache, DCache };

/// Merges the instruction and data cache output ports of one L1 onto
/// max(icache, dcache) combined ports. The first min(icache, dcache) ports are
/// shared and resolved round-robin; the rest belong to the wider cache.
class L1PortSharing {
 public:
  L1PortSharing() = default;
  L1PortSharing(std::uint32_t icache_ports, std::uint32_t dcache_ports);

  std::uint32_t combined_ports() const { return combined_; }
  std::uint32_t shared_ports() const { return shared_; }
  std::uint32_t icache_ports() const { return icache_; }
  std::uint32_t dcache_ports() const { return dcache_; }

  /// Returns the owner granted on every combined port this cycle.
  std::vector<L1Owner> arbitrate(const std::vector<bool>& icache_pending,
                                 const std::vector<bool>& dcache_pending);

  std::uint64_t icache_grants() const { return icache_grants_; }
  std::uint64_t dcache_grants() const { return dcache_grants_; }
  std::uint64_t contended_cycles() const { return contended_; }

 private:
  std::uint32_t icache_ = 0;
  std::uint32_t dcache_ = 0;
  std::uint32_t combined_ = 0;
  std::uint32_t shared_ = 0;
  std::vector<L1Owner> priority_;  // per shared port
  std::uint64_t icache_grants_ = 0;
  std::uint64_t dcache_grants_ = 0;
  std::uint64_t contended_ = 0;
};

}  // namespace memsim
