#include "memsim/workloads.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace memsim {

std::string_view pattern_name(const AccessPattern& pattern) {
  struct Visitor {
    std::string_view operator()(const Contiguous&) const { return "contiguous"; }
    std::string_view operator()(const Strided&) const { return "strided"; }
    std::string_view operator()(const Transpose&) const { return "transpose"; }
    std::string_view operator()(const Irregular&) const { return "irregular"; }
  };
  return std::visit(Visitor{}, pattern);
}

std::uint32_t global_warp_index(const TopologyConfig& t, const SourcePath& p) {
  return ((static_cast<std::uint32_t>(p.cluster) * t.sockets_per_cluster +
           static_cast<std::uint32_t>(p.socket)) *
              t.cores_per_socket +
          static_cast<std::uint32_t>(p.core)) *
             t.warps_per_core +
         static_cast<std::uint32_t>(p.warp);
}

namespace {

void check_spec(const WorkloadSpec& s, std::uint32_t line_size) {
  auto bad = [&](std::string_view why) {
    throw WorkloadError(fmt::format("workload '{}': {}", s.name, why));
  };
  if (s.instructions_per_warp == 0) bad("instructions_per_warp must be >= 1");
  if (s.element_bytes == 0) bad("element_bytes must be >= 1");
  if (s.compute_cycles == 0) bad("compute_cycles must be >= 1");
  if (!(s.compute_per_mem >= 0.0) || !std::isfinite(s.compute_per_mem))
    bad("compute_per_mem must be a finite value >= 0");
  if (s.footprint_bytes < line_size) bad("footprint_bytes must be at least one line");
  const std::uint64_t region = s.store_every > 0 ? s.footprint_bytes / 2 : s.footprint_bytes;
  if (region < s.element_bytes) bad("footprint too small for one element");
  if (const auto* st = std::get_if<Strided>(&s.pattern); st && st->stride < s.element_bytes)
    bad(fmt::format("stride {} is smaller than the {}-byte element", st->stride, s.element_bytes));
  if (const auto* tr = std::get_if<Transpose>(&s.pattern)) {
    if (tr->rows == 0 || tr->cols == 0) bad("transpose dimensions must be >= 1");
    if (std::uint64_t{tr->rows} * tr->cols * s.element_bytes > region)
      bad("transpose matrix does not fit the footprint");
  }
}

// splitmix64 finalizer; keeps per-warp streams independent of each other.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Program> generate(const WorkloadSpec& spec, const TopologyConfig& topology,
                              std::uint32_t line_size, std::uint64_t seed) {
  check_spec(spec, line_size);

  const std::uint64_t total_warps = topology.total_warps();
  const std::uint32_t threads = topology.threads_per_warp;
  const std::uint64_t elem = spec.element_bytes;
  const bool has_stores = spec.store_every > 0;
  const std::uint64_t region = has_stores ? spec.footprint_bytes / 2 : spec.footprint_bytes;
  const std::uint64_t store_base = has_stores ? region : 0;
  const std::uint64_t region_elems = region / elem;
  const double mem_fraction = 1.0 / (1.0 + spec.compute_per_mem);

  std::vector<Program> programs(total_warps);
  for (std::uint64_t gw = 0; gw < total_warps; ++gw) {
    std::mt19937_64 rng;
    if (const auto* irr = std::get_if<Irregular>(&spec.pattern))
      rng.seed(mix(mix(irr->seed ^ seed) + gw));

    auto& prog = programs[gw];
    prog.reserve(spec.instructions_per_warp);
    std::uint64_t load_seq = 0, store_seq = 0, mem_seq = 0;
    std::uint64_t mem_emitted = 0;

    for (std::uint32_t i = 0; i < spec.instructions_per_warp; ++i) {
      const auto mem_target =
          static_cast<std::uint64_t>(std::floor((i + 1) * mem_fraction + 1e-9));
      if (mem_target <= mem_emitted) {
        prog.push_back(Instruction::compute(spec.compute_cycles));
        continue;
      }
      ++mem_emitted;
      const bool store = has_stores && (mem_seq % spec.store_every) == spec.store_every - 1;
      ++mem_seq;
      const std::uint64_t seq = store ? store_seq++ : load_seq++;
      const std::uint64_t base = store ? store_base : 0;
      const std::uint64_t slot = seq * total_warps + gw;

      std::vector<Address> addrs(threads);
      for (std::uint32_t t = 0; t < threads; ++t) {
        std::uint64_t offset = 0;
        if (std::holds_alternative<Contiguous>(spec.pattern)) {
          offset = ((slot * threads + t) % region_elems) * elem;
        } else if (const auto* st = std::get_if<Strided>(&spec.pattern)) {
          offset = (slot * st->stride + t * elem) % region;
        } else if (const auto* tr = std::get_if<Transpose>(&spec.pattern)) {
          const std::uint64_t n = slot * threads + t;
          if (store) {
            offset = (n % region_elems) * elem;
          } else {
            const std::uint64_t r = n % tr->rows;
            const std::uint64_t c = (n / tr->rows) % tr->cols;
            offset = (r * tr->cols + c) * elem;
          }
        } else {
          offset = (rng() % region_elems) * elem;
        }
        addrs[t] = base + offset;
      }
      prog.push_back(store ? Instruction::store(std::move(addrs))
                           : Instruction::load(std::move(addrs)));
    }
  }
  return programs;
}

std::vector<WorkloadSpec> builtin_suite() {
  std::vector<WorkloadSpec> suite;

  WorkloadSpec conv3;
  conv3.name = "conv3";
  conv3.pattern = Strided{192};
  conv3.compute_per_mem = 8;
  suite.push_back(conv3);

  WorkloadSpec sgemm;
  sgemm.name = "sgemm";
  sgemm.pattern = Contiguous{};
  sgemm.compute_per_mem = 8;
  suite.push_back(sgemm);

  WorkloadSpec bfs;
  bfs.name = "bfs";
  bfs.pattern = Irregular{7};
  bfs.compute_per_mem = 0.5;
  suite.push_back(bfs);

  WorkloadSpec transpose;
  transpose.name = "transpose";
  transpose.pattern = Transpose{512, 528};
  transpose.compute_per_mem = 1;
  transpose.store_every = 2;
  suite.push_back(transpose);

  WorkloadSpec vecadd;
  vecadd.name = "vecadd";
  vecadd.pattern = Contiguous{};
  vecadd.compute_per_mem = 1;
  vecadd.store_every = 3;
  suite.push_back(vecadd);

  return suite;
}

std::optional<WorkloadSpec> find_builtin(std::string_view name) {
  for (auto& s : builtin_suite()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& s : builtin_suite()) names.push_back(s.name);
  return names;
}

namespace {

using nlohmann::json;

template <typename T>
T read_number(const json& obj, std::string_view key, T fallback, const std::string& where) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number())
      throw ConfigError(ConfigErrc::ParseError,
                        fmt::format("{}: key '{}': expected a number", where, key));
  } else {
    if (!it->is_number_unsigned())
      throw ConfigError(ConfigErrc::ParseError,
                        fmt::format("{}: key '{}': expected a non-negative integer", where, key));
  }
  return it->get<T>();
}

WorkloadSpec read_spec(const json& obj, const std::string& where) {
  if (!obj.is_object())
    throw ConfigError(ConfigErrc::ParseError, fmt::format("{}: expected an object", where));
  static const std::vector<std::string> known = {
      "name",        "pattern",       "stride",          "rows",
      "cols",        "seed",          "compute_per_mem", "instructions_per_warp",
      "footprint_bytes", "element_bytes", "store_every",  "compute_cycles"};
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(ConfigErrc::ParseError,
                        fmt::format("{}: key '{}': unknown key", where, key));
  }
  for (const char* required : {"name", "pattern"}) {
    if (!obj.contains(required))
      throw ConfigError(ConfigErrc::MissingField,
                        fmt::format("{}: missing required key '{}'", where, required));
    if (!obj[required].is_string())
      throw ConfigError(ConfigErrc::ParseError,
                        fmt::format("{}: key '{}': expected a string", where, required));
  }

  WorkloadSpec s;
  s.name = obj["name"].get<std::string>();
  const auto pattern = obj["pattern"].get<std::string>();
  if (pattern == "contiguous") {
    s.pattern = Contiguous{};
  } else if (pattern == "strided") {
    s.pattern = Strided{read_number<std::uint64_t>(obj, "stride", 0, where)};
  } else if (pattern == "transpose") {
    s.pattern = Transpose{read_number<std::uint32_t>(obj, "rows", 0, where),
                          read_number<std::uint32_t>(obj, "cols", 0, where)};
  } else if (pattern == "irregular") {
    s.pattern = Irregular{read_number<std::uint64_t>(obj, "seed", 0, where)};
  } else {
    throw ConfigError(ConfigErrc::ParseError,
                      fmt::format("{}: key 'pattern': unknown pattern '{}'", where, pattern));
  }
  s.compute_per_mem = read_number<double>(obj, "compute_per_mem", s.compute_per_mem, where);
  s.instructions_per_warp =
      read_number<std::uint32_t>(obj, "instructions_per_warp", s.instructions_per_warp, where);
  s.footprint_bytes = read_number<std::uint64_t>(obj, "footprint_bytes", s.footprint_bytes, where);
  s.element_bytes = read_number<std::uint32_t>(obj, "element_bytes", s.element_bytes, where);
  s.store_every = read_number<std::uint32_t>(obj, "store_every", s.store_every, where);
  s.compute_cycles = read_number<std::uint32_t>(obj, "compute_cycles", s.compute_cycles, where);
  return s;
}

}  // namespace

std::vector<WorkloadSpec> parse_workloads(std::string_view text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrc::ParseError, fmt::format("{}: malformed JSON: {}", origin, e.what()));
  }
  std::vector<WorkloadSpec> out;
  if (!doc.is_object() || !doc.contains("workloads")) return out;
  const auto& list = doc["workloads"];
  if (!list.is_array())
    throw ConfigError(ConfigErrc::ParseError,
                      fmt::format("{}: key 'workloads': expected an array", origin));
  for (std::size_t i = 0; i < list.size(); ++i)
    out.push_back(read_spec(list[i], fmt::format("{}: workloads[{}]", origin, i)));
  return out;
}

std::vector<WorkloadSpec> load_workloads(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(ConfigErrc::ParseError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_workloads(buf.str(), path.string());
}

std::vector<Program> programs_from_trace(const std::vector<TraceRecord>& records,
                                         const TopologyConfig& topology) {
  std::vector<Program> programs(topology.total_warps());
  for (const auto& r : records) {
    if (r.origin != Origin::Core || r.source.warp < 0) continue;
    const auto& p = r.source;
    if (p.cluster < 0 || p.socket < 0 || p.core < 0 ||
        static_cast<std::uint32_t>(p.cluster) >= topology.num_clusters ||
        static_cast<std::uint32_t>(p.socket) >= topology.sockets_per_cluster ||
        static_cast<std::uint32_t>(p.core) >= topology.cores_per_socket ||
        static_cast<std::uint32_t>(p.warp) >= topology.warps_per_core)
      throw WorkloadError(fmt::format("trace request {} has a source path outside the topology", r.id));
    std::vector<Address> addrs(topology.threads_per_warp, r.address);
    programs[global_warp_index(topology, p)].push_back(
        r.is_write ? Instruction::store(std::move(addrs)) : Instruction::load(std::move(addrs)));
  }
  return programs;
}

}  // namespace memsim
