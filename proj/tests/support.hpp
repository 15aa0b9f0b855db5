// Reference models shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cstdint>
#include <list>
#include <vector>

#include "memsim/interconnect.hpp"

namespace memsim::testing {

// Functional LRU cache over the whole address space: one flat array of sets,
// set = line mod total_sets, no banks, no timing.
class FlatLru {
 public:
  FlatLru(std::uint64_t total_sets, std::uint32_t ways, std::uint32_t line_size)
      : sets_(total_sets), ways_(ways), line_(line_size) {}

  // True on a hit. Misses install the line immediately.
  bool access(std::uint64_t address) {
    const auto line = address / line_;
    auto& set = sets_[line % sets_.size()];
    for (auto it = set.begin(); it != set.end(); ++it) {
      if (*it == line) {
        set.splice(set.begin(), set, it);
        return true;
      }
    }
    set.push_front(line);
    if (set.size() > ways_) set.pop_back();
    return false;
  }

 private:
  std::vector<std::list<std::uint64_t>> sets_;
  std::uint32_t ways_;
  std::uint32_t line_;
};

struct StarvationResult {
  std::uint64_t instances = 0;
  std::uint32_t worst_delay = 0;  // cycles until the slowest pending input was first granted
  bool illegal_grant = false;
  bool missing_grant = false;  // some pending input never granted within the horizon
};

// Persistent contention: the same pending vector every cycle from `state`.
// Records, for every pending input, the cycle (1-based) of its first grant.
inline void measure(std::vector<Demand> pending, ArbiterState state, std::uint32_t horizon,
                    StarvationResult& out) {
  std::vector<std::uint32_t> first(pending.size(), 0);
  for (std::uint32_t cycle = 1; cycle <= horizon; ++cycle) {
    const auto g = arbitrate(pending, state);
    if (!g.is_legal(state.num_inputs, state.num_outputs)) out.illegal_grant = true;
    for (const auto& x : g.grants) {
      if (pending[x.input] == kNoDemand) out.illegal_grant = true;
      if (state.policy == ArbitrationPolicy::Crossbar && pending[x.input] != x.output)
        out.illegal_grant = true;
      if (first[x.input] == 0) first[x.input] = cycle;
    }
  }
  ++out.instances;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (pending[i] == kNoDemand) continue;
    if (first[i] == 0) {
      out.missing_grant = true;
    } else {
      out.worst_delay = std::max(out.worst_delay, first[i]);
    }
  }
}

// Every pending-set pattern of one (inputs, outputs, groups) instance, from
// every reachable starting pointer position.
inline StarvationResult exhaustive_starvation(ArbitrationPolicy policy, std::uint32_t inputs,
                                              std::uint32_t outputs, std::uint32_t groups) {
  StarvationResult res;
  const std::uint32_t horizon = 2 * inputs + 2;
  const auto fresh = make_arbiter_state(policy, inputs, outputs, groups);

  if (policy == ArbitrationPolicy::Crossbar) {
    // Each input demands one output or nothing: (outputs + 1)^inputs patterns.
    std::vector<Demand> pending(inputs, kNoDemand);
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < inputs; ++i) total *= outputs + 1;
    for (std::uint64_t code = 0; code < total; ++code) {
      auto c = code;
      for (std::uint32_t i = 0; i < inputs; ++i) {
        const auto d = static_cast<std::uint32_t>(c % (outputs + 1));
        c /= outputs + 1;
        pending[i] = d == outputs ? kNoDemand : d;
      }
      for (std::uint32_t p = 0; p < inputs; ++p) {
        auto s = fresh;
        for (std::uint32_t o = 0; o < outputs; ++o) s.rr_per_output_pointers[o] = (p + o) % inputs;
        measure(pending, s, horizon, res);
      }
    }
    return res;
  }

  std::vector<std::uint32_t> starts;
  if (policy == ArbitrationPolicy::SourceRoundRobin) {
    for (std::uint32_t b = 0; b < inputs / outputs; ++b) starts.push_back(b);
  } else {
    const auto size = inputs / groups, window = outputs / groups;
    for (std::uint32_t k = 0; k < size; ++k) {
      const auto off = (k * window) % size;
      if (std::find(starts.begin(), starts.end(), off) == starts.end()) starts.push_back(off);
    }
  }
  std::vector<Demand> pending(inputs);
  for (std::uint32_t mask = 0; mask < (1u << inputs); ++mask) {
    for (std::uint32_t i = 0; i < inputs; ++i) pending[i] = (mask >> i) & 1 ? 0 : kNoDemand;
    for (auto start : starts) {
      auto s = fresh;
      if (policy == ArbitrationPolicy::SourceRoundRobin)
        s.rr_group_pointer = start;
      else
        s.rr_window_offset = start;
      measure(pending, s, horizon, res);
    }
  }
  return res;
}

// The stated worst-case first-grant delay of each policy.
inline std::uint32_t starvation_bound(ArbitrationPolicy policy, std::uint32_t inputs,
                                      std::uint32_t outputs, std::uint32_t groups) {
  switch (policy) {
    case ArbitrationPolicy::Crossbar: return inputs;
    case ArbitrationPolicy::SourceRoundRobin: return inputs / outputs;
    case ArbitrationPolicy::DistributedRoundRobin: {
      const auto size = inputs / groups, window = outputs / groups;
      return (size + window - 1) / window;
    }
    case ArbitrationPolicy::Direct: return 1;
  }
  return 0;
}

}  // namespace memsim::testing
