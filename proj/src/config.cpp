#include "memsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

namespace memsim {

using nlohmann::json;

std::string_view to_string(ConfigErrc code) {
  switch (code) {
    case ConfigErrc::PortMismatch: return "PortMismatch";
    case ConfigErrc::NonPowerOfTwo: return "NonPowerOfTwo";
    case ConfigErrc::GroupIndivisible: return "GroupIndivisible";
    case ConfigErrc::ZeroField: return "ZeroField";
    case ConfigErrc::InvalidGeometry: return "InvalidGeometry";
    case ConfigErrc::ParseError: return "ParseError";
    case ConfigErrc::MissingField: return "MissingField";
  }
  return "?";
}

std::string_view to_string(ArbitrationPolicy policy) {
  switch (policy) {
    case ArbitrationPolicy::Direct: return "direct";
    case ArbitrationPolicy::Crossbar: return "crossbar";
    case ArbitrationPolicy::SourceRoundRobin: return "source_rr";
    case ArbitrationPolicy::DistributedRoundRobin: return "distributed_rr";
  }
  return "?";
}

ArbitrationPolicy parse_policy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "direct") return ArbitrationPolicy::Direct;
  if (lower == "crossbar" || lower == "a" || lower == "arb-a") return ArbitrationPolicy::Crossbar;
  if (lower == "source_rr" || lower == "b" || lower == "arb-b")
    return ArbitrationPolicy::SourceRoundRobin;
  if (lower == "distributed_rr" || lower == "c" || lower == "arb-c")
    return ArbitrationPolicy::DistributedRoundRobin;
  throw ConfigError(ConfigErrc::ParseError,
                    fmt::format("unknown arbitration policy '{}' (expected direct, crossbar, "
                                "source_rr or distributed_rr)",
                                name));
}

bool is_power_of_two(std::uint64_t value) { return value != 0 && (value & (value - 1)) == 0; }

HierarchyConfig default_config() {
  HierarchyConfig c;

  c.l1_icache.capacity_bytes = 16 * 1024;
  c.l1_icache.ways = 2;
  c.l1_icache.hit_latency = 2;
  c.l1_icache.input_ports = 1;

  c.l1_dcache.capacity_bytes = 16 * 1024;
  c.l1_dcache.ways = 4;
  c.l1_dcache.hit_latency = 2;

  c.l2.capacity_bytes = 128 * 1024;
  c.l2.ways = 8;
  c.l2.hit_latency = 10;

  c.l3.enabled = false;
  c.l3.capacity_bytes = 512 * 1024;
  c.l3.ways = 16;
  c.l3.hit_latency = 20;

  return c;
}

PortDerivation derive_output_ports(std::uint32_t input_ports, std::uint32_t downstream_ports) {
  const auto out = std::min(input_ports, downstream_ports);
  return {out, out == input_ports};
}

namespace {

[[noreturn]] void fail(ConfigErrc code, const std::string& msg) { throw ConfigError(code, msg); }

void require_nonzero(std::uint64_t value, std::string_view field) {
  if (value == 0) fail(ConfigErrc::ZeroField, fmt::format("{} must be >= 1", field));
}

void require_pow2(std::uint64_t value, std::string_view field) {
  if (!is_power_of_two(value))
    fail(ConfigErrc::NonPowerOfTwo, fmt::format("{} must be a power of two (got {})", field, value));
}

void check_cache_fields(const CacheLevelConfig& c, std::string_view name) {
  require_nonzero(c.capacity_bytes, fmt::format("{}.capacity_bytes", name));
  require_nonzero(c.ways, fmt::format("{}.ways", name));
  require_nonzero(c.line_size, fmt::format("{}.line_size", name));
  require_nonzero(c.mshr_per_bank, fmt::format("{}.mshr_per_bank", name));
  require_nonzero(c.hit_latency, fmt::format("{}.hit_latency", name));
  require_nonzero(c.queue_depth, fmt::format("{}.queue_depth", name));
  require_pow2(c.line_size, fmt::format("{}.line_size", name));
}

// Fills the derived port fields of `level`, rejecting user values that
// disagree with the derivation.
void apply_ports(CacheLevelConfig& level, std::string_view name, std::uint32_t inputs,
                 std::uint32_t outputs) {
  auto settle = [&](std::uint32_t& field, std::uint32_t derived, std::string_view what) {
    if (field != 0 && field != derived)
      fail(ConfigErrc::PortMismatch,
           fmt::format("{}.{} = {} but the topology requires {}", name, what, field, derived));
    field = derived;
  };
  settle(level.input_ports, inputs, "input_ports");
  settle(level.num_banks, inputs, "num_banks");
  settle(level.output_ports, outputs, "output_ports");
}

void check_geometry(const CacheLevelConfig& c, std::string_view name) {
  const std::uint64_t unit = std::uint64_t{c.ways} * c.line_size * c.num_banks;
  if (c.capacity_bytes % unit != 0 || c.capacity_bytes / unit == 0)
    fail(ConfigErrc::InvalidGeometry,
         fmt::format("{}.capacity_bytes = {} is not a multiple of ways x line_size x banks = {}",
                     name, c.capacity_bytes, unit));
}

void check_policy(ArbitrationPolicy policy, const BoundaryShape& b, std::string_view name) {
  if (b.direct()) return;
  switch (policy) {
    case ArbitrationPolicy::Direct:
      fail(ConfigErrc::PortMismatch,
           fmt::format("direct policy at {} boundary needs equal ports ({} inputs, {} outputs)",
                       name, b.inputs, b.outputs));
    case ArbitrationPolicy::SourceRoundRobin:
      if (b.inputs % b.outputs != 0)
        fail(ConfigErrc::GroupIndivisible,
             fmt::format("source_rr at {} boundary: {} inputs do not split into groups of {}", name,
                         b.inputs, b.outputs));
      break;
    case ArbitrationPolicy::DistributedRoundRobin:
      if (b.outputs % b.groups != 0 || b.inputs % b.groups != 0)
        fail(ConfigErrc::GroupIndivisible,
             fmt::format("distributed_rr at {} boundary: {} outputs / {} inputs not divisible by "
                         "{} source groups",
                         name, b.outputs, b.inputs, b.groups));
      break;
    case ArbitrationPolicy::Crossbar:
      break;
  }
}

}  // namespace

ValidatedConfig validate(const HierarchyConfig& input) {
  ValidatedConfig v;
  v.config_ = input;
  HierarchyConfig& c = v.config_;
  const auto& t = c.topology;

  require_nonzero(t.num_clusters, "topology.num_clusters");
  require_nonzero(t.sockets_per_cluster, "topology.sockets_per_cluster");
  require_nonzero(t.cores_per_socket, "topology.cores_per_socket");
  require_nonzero(t.warps_per_core, "topology.warps_per_core");
  require_nonzero(t.threads_per_warp, "topology.threads_per_warp");
  // The L1 data cache has one input port per core of the socket.
  require_pow2(t.cores_per_socket, "topology.cores_per_socket");

  check_cache_fields(c.l1_icache, "l1i");
  check_cache_fields(c.l1_dcache, "l1d");
  check_cache_fields(c.l2, "l2");
  if (c.l3.enabled) check_cache_fields(c.l3, "l3");
  if (!c.l1_icache.enabled || !c.l1_dcache.enabled || !c.l2.enabled)
    fail(ConfigErrc::InvalidGeometry, "only the L3 may be disabled");

  require_nonzero(c.l1_icache.input_ports, "l1i.input_ports");
  require_pow2(c.l1_icache.input_ports, "l1i.input_ports");

  const std::uint32_t line = c.l1_dcache.line_size;
  for (const auto* level : {&c.l1_icache, &c.l2}) {
    if (level->line_size != line)
      fail(ConfigErrc::InvalidGeometry, "all cache levels must share one line size");
  }
  if (c.l3.enabled && c.l3.line_size != line)
    fail(ConfigErrc::InvalidGeometry, "all cache levels must share one line size");

  auto& m = c.memory;
  require_nonzero(m.num_channels, "memory.mem_ports");
  require_nonzero(m.channel_latency, "memory.channel_latency");
  require_nonzero(m.requests_per_channel_per_cycle, "memory.requests_per_channel_per_cycle");
  require_nonzero(m.channel_queue_depth, "memory.channel_queue_depth");
  require_pow2(m.num_channels, "memory.mem_ports");
  if (m.num_channels > 16)
    fail(ConfigErrc::NonPowerOfTwo, "memory.mem_ports must be one of 1, 2, 4, 8, 16");

  require_nonzero(c.core.icache_fetch_interval, "core.icache_fetch_interval");
  if (c.core.code_footprint_bytes < line)
    fail(ConfigErrc::InvalidGeometry, "core.code_footprint_bytes must hold at least one line");
  require_nonzero(c.cycle_cap, "cycle_cap");

  // Port chain. Every level may expose at most one output port per HBM
  // channel; each level has one bank per incoming request port.
  const std::uint32_t channels = m.num_channels;

  const auto l1d = derive_output_ports(t.cores_per_socket, channels);
  v.l1d_ = {t.cores_per_socket, l1d.output_ports, 1};
  apply_ports(c.l1_dcache, "l1d", t.cores_per_socket, l1d.output_ports);

  const std::uint32_t icache_in = c.l1_icache.input_ports;
  const auto l1i = derive_output_ports(icache_in, channels);
  v.l1i_ = {icache_in, l1i.output_ports, 1};
  apply_ports(c.l1_icache, "l1i", icache_in, l1i.output_ports);

  v.l1_combined_ports_ = std::max(l1i.output_ports, l1d.output_ports);
  v.l1_shared_ports_ = std::min(l1i.output_ports, l1d.output_ports);

  const std::uint32_t l2_in = t.sockets_per_cluster * v.l1_combined_ports_;
  const auto l2 = derive_output_ports(l2_in, channels);
  v.l2_ = {l2_in, l2.output_ports, t.sockets_per_cluster};
  apply_ports(c.l2, "l2", l2_in, l2.output_ports);

  const std::uint32_t merged = t.num_clusters * l2.output_ports;
  if (c.l3.enabled) {
    const auto l3 = derive_output_ports(merged, channels);
    v.l3_ = {merged, l3.output_ports, t.num_clusters};
    apply_ports(c.l3, "l3", merged, l3.output_ports);
    v.memory_ = {l3.output_ports, l3.output_ports, 1};
  } else {
    const auto mem = derive_output_ports(merged, channels);
    v.l3_ = {};
    v.memory_ = {merged, mem.output_ports, t.num_clusters};
  }

  check_geometry(c.l1_icache, "l1i");
  check_geometry(c.l1_dcache, "l1d");
  check_geometry(c.l2, "l2");
  if (c.l3.enabled) check_geometry(c.l3, "l3");

  const auto policy = c.arbitration.policy;
  check_policy(policy, v.l1i_, "l1i");
  check_policy(policy, v.l1d_, "l1d");
  check_policy(policy, v.l2_, "l2");
  if (c.l3.enabled) check_policy(policy, v.l3_, "l3");
  check_policy(policy, v.memory_, "memory");

  return v;
}

// ---------------------------------------------------------------------------
// JSON format

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

class Reader {
 public:
  Reader(const json& obj, std::string path, std::string_view origin)
      : obj_(obj), path_(std::move(path)), origin_(origin) {
    if (!obj_.is_object()) fail(ConfigErrc::ParseError, msg(path_, "expected an object"));
  }

  template <typename T>
  void get(std::string_view key, T& out) {
    seen_.emplace_back(key);
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) return;
    const auto where = path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) fail(ConfigErrc::ParseError, msg(where, "expected true/false"));
      out = it->template get<bool>();
    } else {
      if (!it->is_number_unsigned())
        fail(ConfigErrc::ParseError, msg(where, "expected a non-negative integer"));
      const auto raw = it->template get<std::uint64_t>();
      if (raw > std::numeric_limits<T>::max())
        fail(ConfigErrc::ParseError, msg(where, "value out of range"));
      out = static_cast<T>(raw);
    }
  }

  void get_policy(std::string_view key, ArbitrationPolicy& out) {
    seen_.emplace_back(key);
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) return;
    if (!it->is_string()) fail(ConfigErrc::ParseError, msg(path_ + "." + std::string(key), "expected a string"));
    try {
      out = parse_policy(it->get<std::string>());
    } catch (const ConfigError& e) {
      fail(ConfigErrc::ParseError, msg(path_ + "." + std::string(key), e.what()));
    }
  }

  const json* section(std::string_view key) {
    seen_.emplace_back(key);
    auto it = obj_.find(std::string(key));
    return it == obj_.end() ? nullptr : &*it;
  }

  void skip(std::string_view key) { seen_.emplace_back(key); }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        const auto where = path_.empty() ? key : path_ + "." + key;
        fail(ConfigErrc::ParseError, msg(where, "unknown key"));
      }
    }
  }

  std::string msg(std::string_view where, std::string_view what) const {
    return fmt::format("{}: key '{}': {}", origin_, where, what);
  }

 private:
  const json& obj_;
  std::string path_;
  std::string_view origin_;
  std::vector<std::string> seen_;
};

void read_cache(const json* node, CacheLevelConfig& c, const std::string& name,
                std::string_view origin) {
  if (node == nullptr) return;
  Reader r(*node, name, origin);
  r.get("enabled", c.enabled);
  r.get("capacity_bytes", c.capacity_bytes);
  r.get("ways", c.ways);
  r.get("line_size", c.line_size);
  r.get("num_banks", c.num_banks);
  r.get("mshr_per_bank", c.mshr_per_bank);
  r.get("hit_latency", c.hit_latency);
  r.get("input_ports", c.input_ports);
  r.get("output_ports", c.output_ports);
  r.get("queue_depth", c.queue_depth);
  r.reject_unknown();
}

json write_cache(const CacheLevelConfig& c) {
  return json{{"enabled", c.enabled},         {"capacity_bytes", c.capacity_bytes},
              {"ways", c.ways},               {"line_size", c.line_size},
              {"num_banks", c.num_banks},     {"mshr_per_bank", c.mshr_per_bank},
              {"hit_latency", c.hit_latency}, {"input_ports", c.input_ports},
              {"output_ports", c.output_ports}, {"queue_depth", c.queue_depth}};
}

}  // namespace

HierarchyConfig parse_config(std::string_view text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrc::ParseError,
                      fmt::format("{}: line {}: malformed JSON: {}", origin,
                                  line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what()));
  }

  HierarchyConfig c = default_config();
  Reader root(doc, "", origin);

  if (const auto* t = root.section("topology")) {
    Reader r(*t, "topology", origin);
    r.get("num_clusters", c.topology.num_clusters);
    r.get("sockets_per_cluster", c.topology.sockets_per_cluster);
    r.get("cores_per_socket", c.topology.cores_per_socket);
    r.get("warps_per_core", c.topology.warps_per_core);
    r.get("threads_per_warp", c.topology.threads_per_warp);
    r.reject_unknown();
  }
  read_cache(root.section("l1i"), c.l1_icache, "l1i", origin);
  read_cache(root.section("l1d"), c.l1_dcache, "l1d", origin);
  read_cache(root.section("l2"), c.l2, "l2", origin);
  read_cache(root.section("l3"), c.l3, "l3", origin);
  if (const auto* m = root.section("memory")) {
    Reader r(*m, "memory", origin);
    r.get("mem_ports", c.memory.num_channels);
    r.get("channel_latency", c.memory.channel_latency);
    r.get("requests_per_channel_per_cycle", c.memory.requests_per_channel_per_cycle);
    r.get("channel_queue_depth", c.memory.channel_queue_depth);
    r.reject_unknown();
  }
  if (const auto* a = root.section("arbitration")) {
    Reader r(*a, "arbitration", origin);
    r.get_policy("policy", c.arbitration.policy);
    r.get("strict_time_slice", c.arbitration.strict_time_slice);
    r.reject_unknown();
  }
  if (const auto* k = root.section("core")) {
    Reader r(*k, "core", origin);
    r.get("icache_fetch_interval", c.core.icache_fetch_interval);
    r.get("code_footprint_bytes", c.core.code_footprint_bytes);
    r.reject_unknown();
  }
  root.get("seed", c.seed);
  root.get("cycle_cap", c.cycle_cap);
  root.skip("workloads");  // read by load_workloads()
  root.reject_unknown();
  return c;
}

HierarchyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(ConfigErrc::ParseError, fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string serialize_config(const HierarchyConfig& c) {
  json doc;
  doc["topology"] = {{"num_clusters", c.topology.num_clusters},
                     {"sockets_per_cluster", c.topology.sockets_per_cluster},
                     {"cores_per_socket", c.topology.cores_per_socket},
                     {"warps_per_core", c.topology.warps_per_core},
                     {"threads_per_warp", c.topology.threads_per_warp}};
  doc["l1i"] = write_cache(c.l1_icache);
  doc["l1d"] = write_cache(c.l1_dcache);
  doc["l2"] = write_cache(c.l2);
  doc["l3"] = write_cache(c.l3);
  doc["memory"] = {{"mem_ports", c.memory.num_channels},
                   {"channel_latency", c.memory.channel_latency},
                   {"requests_per_channel_per_cycle", c.memory.requests_per_channel_per_cycle},
                   {"channel_queue_depth", c.memory.channel_queue_depth}};
  doc["arbitration"] = {{"policy", std::string(to_string(c.arbitration.policy))},
                        {"strict_time_slice", c.arbitration.strict_time_slice}};
  doc["core"] = {{"icache_fetch_interval", c.core.icache_fetch_interval},
                 {"code_footprint_bytes", c.core.code_footprint_bytes}};
  doc["seed"] = c.seed;
  doc["cycle_cap"] = c.cycle_cap;
  return doc.dump(2) + "\n";
}

}  // namespace memsim
