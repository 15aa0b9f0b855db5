#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/core.hpp"
#include "memsim/protocol.hpp"

namespace memsim {

class WorkloadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every thread of a warp reads consecutive elements; consecutive warps
/// continue where the previous one stopped.
struct Contiguous {
  bool operator==(const Contiguous&) const = default;
};
/// Warp base addresses are `stride` bytes apart; threads read consecutive
/// elements from their warp's base.
struct Strided {
  std::uint64_t stride = 0;
  bool operator==(const Strided&) const = default;
};
/// Column-major reads over a row-major rows x cols matrix, row-major writes.
struct Transpose {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  bool operator==(const Transpose&) const = default;
};
/// Uniform random element per thread over the footprint.
struct Irregular {
  std::uint64_t seed = 0;
  bool operator==(const Irregular&) const = default;
};

using AccessPattern = std::variant<Contiguous, Strided, Transpose, Irregular>;

std::string_view pattern_name(const AccessPattern& pattern);

struct WorkloadSpec {
  std::string name;
  AccessPattern pattern = Contiguous{};
  double compute_per_mem = 1.0;       // Compute instructions per memory instruction
  std::uint32_t instructions_per_warp = 512;
  std::uint64_t footprint_bytes = 4u << 20;
  std::uint32_t element_bytes = 4;
  std::uint32_t store_every = 0;      // every n-th memory instruction is a store; 0 = loads only
  std::uint32_t compute_cycles = 1;

  bool operator==(const WorkloadSpec&) const = default;
};

/// Global warp index used to order generated programs:
/// ((cluster * sockets + socket) * cores + core) * warps + warp.
std::uint32_t global_warp_index(const TopologyConfig& topology, const SourcePath& path);

/// Per-warp instruction streams indexed by global_warp_index(). A pure
/// function of its arguments. Throws WorkloadError on an invalid spec.
std::vector<Program> generate(const WorkloadSpec& spec, const TopologyConfig& topology,
                              std::uint32_t line_size, std::uint64_t seed = 0);

/// The five-entry benchmark suite: conv3 and sgemm are compute bound; bfs,
/// transpose and vecadd are memory bound.
std::vector<WorkloadSpec> builtin_suite();
std::optional<WorkloadSpec> find_builtin(std::string_view name);
std::vector<std::string> builtin_names();

/// Reads the optional "workloads" array of a config file.
std::vector<WorkloadSpec> load_workloads(const std::filesystem::path& path);
std::vector<WorkloadSpec> parse_workloads(std::string_view text, std::string_view origin = "<string>");

/// Turns core-issued rows of a request trace into per-warp programs: each
/// row becomes one single-line Load or Store.
std::vector<Program> programs_from_trace(const std::vector<TraceRecord>& records,
                                         const TopologyConfig& topology);

}  // namespace memsim
