#include "memsim/interconnect.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace memsim {

bool GrantSet::is_legal(std::uint32_t num_inputs, std::uint32_t num_outputs) const {
  if (grants.size() > num_outputs) return false;
  std::vector<bool> in_used(num_inputs), out_used(num_outputs);
  for (const auto& g : grants) {
    if (g.input >= num_inputs || g.output >= num_outputs) return false;
    if (in_used[g.input] || out_used[g.output]) return false;
    in_used[g.input] = out_used[g.output] = true;
  }
  return true;
}

ArbiterState make_arbiter_state(ArbitrationPolicy policy, std::uint32_t num_inputs,
                                std::uint32_t num_outputs, std::uint32_t num_groups,
                                bool strict_time_slice) {
  if (num_inputs == 0 || num_outputs == 0 || num_groups == 0)
    throw InterconnectError(InterconnectErrc::PolicyMisuse, "arbiter port counts must be >= 1");
  if (num_inputs % num_groups != 0)
    throw InterconnectError(
        InterconnectErrc::GroupIndivisible,
        fmt::format("{} inputs do not split into {} source groups", num_inputs, num_groups));

  switch (policy) {
    case ArbitrationPolicy::Direct:
      if (num_inputs != num_outputs)
        throw InterconnectError(InterconnectErrc::PolicyMisuse,
                                fmt::format("direct mapping needs equal ports ({} vs {})",
                                            num_inputs, num_outputs));
      break;
    case ArbitrationPolicy::SourceRoundRobin:
      if (num_inputs % num_outputs != 0)
        throw InterconnectError(InterconnectErrc::GroupIndivisible,
                                fmt::format("{} inputs do not split into blocks of {} outputs",
                                            num_inputs, num_outputs));
      break;
    case ArbitrationPolicy::DistributedRoundRobin:
      if (num_outputs % num_groups != 0)
        throw InterconnectError(
            InterconnectErrc::GroupIndivisible,
            fmt::format("{} outputs do not split into {} source groups", num_outputs, num_groups));
      if (num_outputs / num_groups > num_inputs / num_groups)
        throw InterconnectError(InterconnectErrc::PolicyMisuse,
                                "distributed round-robin needs at least as many inputs as outputs");
      break;
    case ArbitrationPolicy::Crossbar:
      break;
  }

  ArbiterState s;
  s.policy = policy;
  s.num_inputs = num_inputs;
  s.num_outputs = num_outputs;
  s.num_groups = num_groups;
  s.strict_time_slice = strict_time_slice;
  s.rr_per_output_pointers.assign(num_outputs, 0);
  return s;
}

GrantSet arbitrate_direct(std::span<const Demand> pending, std::uint32_t num_outputs) {
  if (pending.size() != num_outputs)
    throw InterconnectError(InterconnectErrc::PolicyMisuse,
                            fmt::format("direct mapping needs equal ports ({} vs {})",
                                        pending.size(), num_outputs));
  GrantSet out;
  for (std::uint32_t i = 0; i < pending.size(); ++i) {
    if (pending[i] != kNoDemand) out.grants.push_back({i, i});
  }
  return out;
}

GrantSet arbitrate_crossbar(std::span<const Demand> pending, ArbiterState& s) {
  GrantSet out;
  const auto n = s.num_inputs;
  for (std::uint32_t o = 0; o < s.num_outputs; ++o) {
    auto& ptr = s.rr_per_output_pointers[o];
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint32_t i = (ptr + k) % n;
      if (pending[i] == o) {
        out.grants.push_back({i, o});
        ptr = (i + 1) % n;
        break;
      }
    }
  }
  std::sort(out.grants.begin(), out.grants.end(),
            [](const Grant& a, const Grant& b) { return a.input < b.input; });
  return out;
}

GrantSet arbitrate_source_rr(std::span<const Demand> pending, ArbiterState& s) {
  GrantSet out;
  const std::uint32_t width = s.num_outputs;
  const std::uint32_t blocks = s.num_inputs / width;

  auto block_pending = [&](std::uint32_t b) {
    for (std::uint32_t j = 0; j < width; ++j) {
      if (pending[b * width + j] != kNoDemand) return true;
    }
    return false;
  };

  std::uint32_t chosen = blocks;
  if (s.strict_time_slice) {
    chosen = s.rr_group_pointer;
    s.rr_group_pointer = (s.rr_group_pointer + 1) % blocks;
  } else {
    for (std::uint32_t k = 0; k < blocks; ++k) {
      const std::uint32_t b = (s.rr_group_pointer + k) % blocks;
      if (block_pending(b)) {
        chosen = b;
        s.rr_group_pointer = (b + 1) % blocks;
        break;
      }
    }
  }
  if (chosen == blocks) return out;

  for (std::uint32_t j = 0; j < width; ++j) {
    const std::uint32_t i = chosen * width + j;
    if (pending[i] != kNoDemand) out.grants.push_back({i, j});
  }
  return out;
}

GrantSet arbitrate_distributed_rr(std::span<const Demand> pending, ArbiterState& s) {
  GrantSet out;
  const std::uint32_t group_size = s.num_inputs / s.num_groups;
  const std::uint32_t window = s.num_outputs / s.num_groups;

  for (std::uint32_t g = 0; g < s.num_groups; ++g) {
    for (std::uint32_t k = 0; k < window; ++k) {
      const std::uint32_t port = (s.rr_window_offset + k) % group_size;
      const std::uint32_t i = g * group_size + port;
      if (pending[i] != kNoDemand) out.grants.push_back({i, g * window + k});
    }
  }
  s.rr_window_offset = (s.rr_window_offset + window) % group_size;
  std::sort(out.grants.begin(), out.grants.end(),
            [](const Grant& a, const Grant& b) { return a.input < b.input; });
  return out;
}

GrantSet arbitrate(std::span<const Demand> pending, ArbiterState& s) {
  if (pending.size() != s.num_inputs)
    throw InterconnectError(InterconnectErrc::PolicyMisuse,
                            fmt::format("arbiter has {} inputs, got {} demands", s.num_inputs,
                                        pending.size()));
  switch (s.policy) {
    case ArbitrationPolicy::Direct: return arbitrate_direct(pending, s.num_outputs);
    case ArbitrationPolicy::Crossbar: return arbitrate_crossbar(pending, s);
    case ArbitrationPolicy::SourceRoundRobin: return arbitrate_source_rr(pending, s);
    case ArbitrationPolicy::DistributedRoundRobin: return arbitrate_distributed_rr(pending, s);
  }
  return {};
}

std::uint64_t ArbiterCounters::total_grants() const {
  return std::accumulate(grants_per_output.begin(), grants_per_output.end(), std::uint64_t{0});
}

Arbiter::Arbiter(ArbitrationPolicy policy, const BoundaryShape& shape, bool strict_time_slice) {
  const auto effective = shape.direct() ? ArbitrationPolicy::Direct : policy;
  state_ = make_arbiter_state(effective, shape.inputs, shape.outputs, shape.groups,
                              strict_time_slice);
  counters_.grants_per_input.assign(shape.inputs, 0);
  counters_.grants_per_output.assign(shape.outputs, 0);
}

GrantSet Arbiter::arbitrate(std::span<const Demand> pending) {
  auto grants = memsim::arbitrate(pending, state_);
  for (const auto& g : grants.grants) {
    ++counters_.grants_per_input[g.input];
    ++counters_.grants_per_output[g.output];
  }
  const auto waiting =
      std::count_if(pending.begin(), pending.end(), [](Demand d) { return d != kNoDemand; });
  counters_.stall_cycles += static_cast<std::uint64_t>(waiting) - grants.size();
  if (!grants.empty()) ++counters_.busy_cycles;
  return grants;
}

void Arbiter::revoke(const Grant& g) {
  --counters_.grants_per_input[g.input];
  --counters_.grants_per_output[g.output];
  ++counters_.stall_cycles;
}

L1PortSharing::L1PortSharing(std::uint32_t icache_ports, std::uint32_t dcache_ports)
    : icache_(icache_ports),
      dcache_(dcache_ports),
      combined_(std::max(icache_ports, dcache_ports)),
      shared_(std::min(icache_ports, dcache_ports)),
      priority_(shared_, L1Owner::ICache) {}

std::vector<L1Owner> L1PortSharing::arbitrate(const std::vector<bool>& icache_pending,
                                              const std::vector<bool>& dcache_pending) {
  if (icache_pending.size() != icache_ || dcache_pending.size() != dcache_)
    throw InterconnectError(InterconnectErrc::PolicyMisuse, "L1 port flag count mismatch");

  std::vector<L1Owner> owner(combined_, L1Owner::None);
  for (std::uint32_t p = 0; p < combined_; ++p) {
    const bool i = p < icache_ && icache_pending[p];
    const bool d = p < dcache_ && dcache_pending[p];
    if (i && d) {
      ++contended_;
      owner[p] = priority_[p];
    } else if (i) {
      owner[p] = L1Owner::ICache;
    } else if (d) {
      owner[p] = L1Owner::DCache;
    }
    if (owner[p] == L1Owner::ICache) ++icache_grants_;
    if (owner[p] == L1Owner::DCache) ++dcache_grants_;
    if (p < shared_ && owner[p] != L1Owner::None)
      priority_[p] = owner[p] == L1Owner::ICache ? L1Owner::DCache : L1Owner::ICache;
  }
  return owner;
}

}  // namespace memsim
