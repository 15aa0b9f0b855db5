#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memsim {

using Cycle = std::uint64_t;
using Address = std::uint64_t;

enum class ConfigErrc {
  PortMismatch,
  NonPowerOfTwo,
  GroupIndivisible,
  ZeroField,
  InvalidGeometry,
  ParseError,
  MissingField,
};

std::string_view to_string(ConfigErrc code);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ConfigErrc code() const noexcept { return code_; }

 private:
  ConfigErrc code_;
};

struct TopologyConfig {
  std::uint32_t num_clusters = 2;
  std::uint32_t sockets_per_cluster = 1;
  std::uint32_t cores_per_socket = 4;
  std::uint32_t warps_per_core = 4;
  std::uint32_t threads_per_warp = 4;

  std::uint32_t total_sockets() const { return num_clusters * sockets_per_cluster; }
  std::uint32_t total_cores() const { return total_sockets() * cores_per_socket; }
  std::uint32_t total_warps() const { return total_cores() * warps_per_core; }

  bool operator==(const TopologyConfig&) const = default;
};

/// Geometry and port counts of one cache level.
///
/// `num_banks`, `input_ports` and `output_ports` are derived by validate();
/// zero means "derive". A nonzero value that disagrees with the derivation is
/// rejected. The L1 instruction cache is the exception: its `input_ports` is
/// a user setting (the instruction-fetch port count).
struct CacheLevelConfig {
  bool enabled = true;
  std::uint64_t capacity_bytes = 0;
  std::uint32_t ways = 1;
  std::uint32_t line_size = 64;
  std::uint32_t num_banks = 0;
  std::uint32_t mshr_per_bank = 4;
  std::uint32_t hit_latency = 1;
  std::uint32_t input_ports = 0;
  std::uint32_t output_ports = 0;
  std::uint32_t queue_depth = 8;

  std::uint32_t sets_per_bank() const {
    return static_cast<std::uint32_t>(capacity_bytes /
                                      (std::uint64_t{ways} * line_size * num_banks));
  }

  bool operator==(const CacheLevelConfig&) const = default;
};

struct MemoryConfig {
  std::uint32_t num_channels = 8;
  std::uint32_t channel_latency = 100;
  std::uint32_t requests_per_channel_per_cycle = 1;
  std::uint32_t channel_queue_depth = 16;

  bool operator==(const MemoryConfig&) const = default;
};

enum class ArbitrationPolicy {
  Direct,
  Crossbar,               // Arb-A
  SourceRoundRobin,       // Arb-B
  DistributedRoundRobin,  // Arb-C
};

std::string_view to_string(ArbitrationPolicy policy);
/// Accepts the long names plus the short aliases A/B/C and direct.
ArbitrationPolicy parse_policy(std::string_view name);

struct ArbitrationConfig {
  ArbitrationPolicy policy = ArbitrationPolicy::Crossbar;
  // Source round-robin serves exactly one group per cycle, even an idle one.
  bool strict_time_slice = false;

  bool operator==(const ArbitrationConfig&) const = default;
};

struct CoreConfig {
  // One instruction-cache line fetch per this many retired instructions.
  std::uint32_t icache_fetch_interval = 16;
  std::uint64_t code_footprint_bytes = 4096;

  bool operator==(const CoreConfig&) const = default;
};

struct HierarchyConfig {
  TopologyConfig topology;
  CacheLevelConfig l1_icache;
  CacheLevelConfig l1_dcache;
  CacheLevelConfig l2;
  CacheLevelConfig l3;
  MemoryConfig memory;
  ArbitrationConfig arbitration;
  CoreConfig core;
  std::uint64_t seed = 1;
  std::uint64_t cycle_cap = 10'000'000;

  bool operator==(const HierarchyConfig&) const = default;
};

/// The documented default configuration: 2 clusters of 1 socket with 4 cores,
/// 4 warps x 4 threads, L3 disabled, 8 HBM channels.
HierarchyConfig default_config();

struct PortDerivation {
  std::uint32_t output_ports = 0;
  bool direct_mapped = false;

  bool operator==(const PortDerivation&) const = default;
};

/// Output ports of a boundary never exceed what the downstream side can take,
/// and are reduced to the input count when fewer requests arrive.
PortDerivation derive_output_ports(std::uint32_t input_ports, std::uint32_t downstream_ports);

/// Port shape of one arbitrated boundary.
struct BoundaryShape {
  std::uint32_t inputs = 0;
  std::uint32_t outputs = 0;
  std::uint32_t groups = 1;

  bool direct() const { return inputs == outputs; }
  bool operator==(const BoundaryShape&) const = default;
};

class ValidatedConfig {
 public:
  const HierarchyConfig& config() const { return config_; }
  const TopologyConfig& topology() const { return config_.topology; }
  std::uint32_t line_size() const { return config_.l1_dcache.line_size; }

  // L1 ports seen by the L2 after instruction/data port sharing.
  std::uint32_t l1_combined_ports() const { return l1_combined_ports_; }
  std::uint32_t l1_shared_ports() const { return l1_shared_ports_; }

  const BoundaryShape& l1i_boundary() const { return l1i_; }
  const BoundaryShape& l1d_boundary() const { return l1d_; }
  const BoundaryShape& l2_boundary() const { return l2_; }
  const BoundaryShape& l3_boundary() const { return l3_; }
  /// Last cache level's outputs into the memory lanes. Only reduced when L3
  /// is disabled and the clusters together expose more ports than channels.
  const BoundaryShape& memory_boundary() const { return memory_; }

  bool operator==(const ValidatedConfig&) const = default;

 private:
  friend ValidatedConfig validate(const HierarchyConfig& config);
  ValidatedConfig() = default;

  HierarchyConfig config_;
  std::uint32_t l1_combined_ports_ = 0;
  std::uint32_t l1_shared_ports_ = 0;
  BoundaryShape l1i_, l1d_, l2_, l3_, memory_;
};

ValidatedConfig validate(const HierarchyConfig& config);

/// Parses the JSON config format. Missing keys keep their defaults; unknown
/// keys and wrongly typed values raise ConfigError(ParseError).
HierarchyConfig parse_config(std::string_view text, std::string_view origin = "<string>");
HierarchyConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const HierarchyConfig& config);

bool is_power_of_two(std::uint64_t value);

}  // namespace memsim
