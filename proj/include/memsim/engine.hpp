#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/config.hpp"
#include "memsim/core.hpp"
#include "memsim/hbm.hpp"
#include "memsim/interconnect.hpp"
#include "memsim/protocol.hpp"
#include "memsim/workloads.hpp"

namespace memsim {

struct PortStats {
  std::string boundary;  // e.g. "l1d[0]", "l2[1]", "l3", "memory", "l1share[0]"
  std::vector<std::uint64_t> grants_per_input;
  std::vector<std::uint64_t> grants_per_output;
  std::uint64_t stall_cycles = 0;
  std::uint64_t busy_cycles = 0;

  bool operator==(const PortStats&) const = default;
};

struct ChannelStats {
  ChannelCounters counters;
  double utilization = 0.0;  // busy cycles / simulated cycles

  bool operator==(const ChannelStats&) const = default;
};

struct SimStats {
  std::uint64_t cycles = 0;
  std::uint64_t retired = 0;
  double ipc = 0.0;

  CacheCounters l1i, l1d, l2, l3;
  CoreCounters cores;
  std::vector<PortStats> ports;
  std::vector<ChannelStats> channels;
  std::uint64_t l1_icache_port_grants = 0;
  std::uint64_t l1_dcache_port_grants = 0;

  std::uint64_t issued_requests = 0;
  std::uint64_t completed_requests = 0;
  std::uint64_t max_outstanding = 0;
  std::uint64_t revoked_grants = 0;
  /// FNV-1a digest of every grant issued, in order. Two runs with the same
  /// digest made identical arbitration decisions.
  std::uint64_t grant_digest = 0;

  double channel_util_mean() const;
  bool operator==(const SimStats&) const = default;
};

enum class SimErrc { CycleCapExceeded, DeadlockDetected };

class SimulationError : public std::runtime_error {
 public:
  SimulationError(SimErrc code, const std::string& what, SimStats partial)
      : std::runtime_error(what), code_(code), partial_(std::move(partial)) {}
  SimErrc code() const noexcept { return code_; }
  const SimStats& partial_stats() const noexcept { return partial_; }

 private:
  SimErrc code_;
  SimStats partial_;
};

struct RunOptions {
  std::optional<std::uint64_t> cycle_cap;  // overrides the config value
  std::ostream* trace = nullptr;           // request trace CSV, header included
};

/// Cycle-stepped model of cores -> L1 (I/D) -> L2 -> optional L3 -> HBM.
///
/// Each step runs these phases in order:
///   1. HBM channels tick and return responses;
///   2. responses and due completions propagate upward, filling caches and
///      waking warps;
///   3. every cache bank takes at most one access from its input queue;
///   4. cores issue, placing requests into L1 bank input queues;
///   5. every port boundary computes grants from its miss-queue heads, then
///      the granted requests move one level down;
///   6. counters commit and the liveness check runs.
class Simulation {
 public:
  Simulation(const ValidatedConfig& config, const WorkloadSpec& workload, RunOptions options = {});
  Simulation(const ValidatedConfig& config, std::vector<Program> programs, RunOptions options = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void step();
  /// Steps until done. Throws SimulationError on cycle cap or deadlock.
  SimStats run();

  bool done() const;
  Cycle cycle() const { return cycle_; }
  SimStats stats() const;
  std::size_t outstanding() const { return outstanding_.size(); }
  const ValidatedConfig& config() const { return config_; }

  // Component access for tests and diagnostics.
  const BankedCache& l1d(std::uint32_t socket) const { return sockets_[socket].dcache; }
  const BankedCache& l1i(std::uint32_t socket) const { return sockets_[socket].icache; }
  const BankedCache& l2(std::uint32_t cluster) const { return clusters_[cluster].l2; }
  const BankedCache* l3() const { return l3_ ? &l3_->cache : nullptr; }
  const HbmDevice& hbm() const { return hbm_; }
  const Core& core(std::uint32_t index) const { return cores_[index]; }
  std::uint32_t num_cores() const { return static_cast<std::uint32_t>(cores_.size()); }

 private:
  struct SocketUnit {
    BankedCache icache;
    BankedCache dcache;
    Arbiter icache_arb;
    Arbiter dcache_arb;
    L1PortSharing sharing;
  };
  struct ClusterUnit {
    BankedCache l2;
    Arbiter arb;
  };
  struct L3Unit {
    BankedCache cache;
    Arbiter arb;
  };
  class SocketPort;
  // A granted miss-queue head waiting for a memory lane.
  struct Lane {
    const MemRequest* request = nullptr;
    CacheBank* bank = nullptr;
    Arbiter* arbiter = nullptr;
    Grant grant;
  };

  void register_request(const MemRequest& req);
  void collect_created(CacheBank& bank);
  void complete(const MemRequest& req);
  void schedule(const MemRequest& req, Cycle when);
  BankedCache& cache_for(const MemRequest& req);
  void deliver_fill(const MemRequest& req);

  void phase_responses();
  void phase_access();
  void phase_cores();
  void phase_transfer();
  void transfer_l1(std::uint32_t socket);
  void transfer_l2();
  void transfer_l3();
  void transfer_memory(std::vector<Lane>& lanes);

  void note_grants(std::uint32_t boundary, const GrantSet& grants);
  bool has_timed_work() const;
  std::string liveness_report() const;

  ValidatedConfig config_;
  RunOptions options_;
  std::uint64_t cycle_cap_;

  std::vector<Core> cores_;
  std::vector<SocketUnit> sockets_;
  std::vector<ClusterUnit> clusters_;
  std::unique_ptr<L3Unit> l3_;
  std::optional<Arbiter> memory_arb_;
  HbmDevice hbm_;

  RequestIdAllocator ids_;
  std::unordered_map<RequestId, MemRequest> outstanding_;
  std::map<Cycle, std::vector<MemRequest>> completions_;

  Cycle cycle_ = 0;
  bool progress_ = false;
  bool stalled_ = false;
  std::uint64_t issued_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t max_outstanding_ = 0;
  std::uint64_t revoked_ = 0;
  std::uint64_t grant_digest_ = 0xcbf29ce484222325ULL;
};

SimStats run(const ValidatedConfig& config, const WorkloadSpec& workload,
             const RunOptions& options = {});

/// One axis of a parameter sweep. Supported parameters: mem_ports,
/// arbitration, channel_latency, l3 (on/off) and seed.
struct SweepAxis {
  std::string parameter;
  std::vector<std::string> values;
};

HierarchyConfig apply_axis_value(const HierarchyConfig& base, const std::string& parameter,
                                 const std::string& value);

struct SweepRow {
  std::string workload;
  std::string point;  // the axis value
  HierarchyConfig config;
  std::optional<SimStats> stats;
  std::string error;  // set when the point failed
};

struct SweepOptions {
  unsigned jobs = 1;
  std::optional<std::uint64_t> cycle_cap;
};

/// Runs every (workload, axis value) pair; rows are ordered by workload, then
/// axis value, whatever `jobs` is. All points are validated before any run
/// starts (ConfigError). Failures of individual runs are recorded in their row.
std::vector<SweepRow> sweep(const HierarchyConfig& base, const SweepAxis& axis,
                            const std::vector<WorkloadSpec>& suite, const SweepOptions& options = {});

}  // namespace memsim
