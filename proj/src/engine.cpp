#include "memsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>

namespace memsim {

double SimStats::channel_util_mean() const {
  if (channels.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : channels) sum += c.utilization;
  return sum / static_cast<double>(channels.size());
}

namespace {

std::uint32_t socket_index(const TopologyConfig& t, const SourcePath& p) {
  return static_cast<std::uint32_t>(p.cluster) * t.sockets_per_cluster +
         static_cast<std::uint32_t>(p.socket);
}

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
}

Demand demand_for(const MemRequest* head, const ValidatedConfig& cfg, std::uint32_t outputs) {
  if (head == nullptr) return kNoDemand;
  return channel_index(head->address, cfg.line_size(), outputs);
}

PortStats port_stats(std::string name, const Arbiter& arb) {
  PortStats p;
  p.boundary = std::move(name);
  p.grants_per_input = arb.counters().grants_per_input;
  p.grants_per_output = arb.counters().grants_per_output;
  p.stall_cycles = arb.counters().stall_cycles;
  p.busy_cycles = arb.counters().busy_cycles;
  return p;
}

}  // namespace

// Core-side adapter onto one socket's L1 banks.
class Simulation::SocketPort : public LsuPort {
 public:
  explicit SocketPort(SocketUnit& unit) : unit_(unit) {}

  bool try_issue(std::span<const MemRequest> requests) override {
    std::vector<std::size_t> need(unit_.dcache.num_banks(), 0);
    for (const auto& r : requests) ++need[unit_.dcache.bank_of(r.address)];
    for (std::uint32_t b = 0; b < need.size(); ++b) {
      if (need[b] > unit_.dcache.bank(b).input_space()) return false;
    }
    for (const auto& r : requests) unit_.dcache.bank_for(r.address).push_input(r);
    return true;
  }

  bool try_fetch(const MemRequest& request) override {
    auto& bank = unit_.icache.bank_for(request.address);
    if (!bank.can_accept()) return false;
    bank.push_input(request);
    return true;
  }

 private:
  SocketUnit& unit_;
};

Simulation::Simulation(const ValidatedConfig& config, const WorkloadSpec& workload,
                       RunOptions options)
    : Simulation(config,
                 generate(workload, config.topology(), config.line_size(), config.config().seed),
                 std::move(options)) {}

Simulation::Simulation(const ValidatedConfig& config, std::vector<Program> programs,
                       RunOptions options)
    : config_(config),
      options_(std::move(options)),
      cycle_cap_(options_.cycle_cap.value_or(config.config().cycle_cap)),
      hbm_(config.config().memory, config.line_size()) {
  const auto& cfg = config_.config();
  const auto& t = cfg.topology;
  if (programs.size() != t.total_warps())
    throw WorkloadError(fmt::format("expected {} warp programs, got {}", t.total_warps(),
                                    programs.size()));

  const auto policy = cfg.arbitration.policy;
  const bool strict = cfg.arbitration.strict_time_slice;

  std::uint32_t gw = 0;
  for (std::uint32_t c = 0; c < t.num_clusters; ++c) {
    for (std::uint32_t s = 0; s < t.sockets_per_cluster; ++s) {
      for (std::uint32_t k = 0; k < t.cores_per_socket; ++k) {
        std::vector<Program> mine(programs.begin() + gw, programs.begin() + gw + t.warps_per_core);
        gw += t.warps_per_core;
        SourcePath where{static_cast<std::int32_t>(c), static_cast<std::int32_t>(s),
                         static_cast<std::int32_t>(k), -1};
        cores_.emplace_back(where, std::move(mine), config_.line_size(), cfg.core);
      }
      const SourcePath owner{static_cast<std::int32_t>(c), static_cast<std::int32_t>(s), -1, -1};
      sockets_.push_back(SocketUnit{
          BankedCache(cfg.l1_icache, Origin::L1I, owner, fmt::format("l1i[{}]", sockets_.size())),
          BankedCache(cfg.l1_dcache, Origin::L1D, owner, fmt::format("l1d[{}]", sockets_.size())),
          Arbiter(policy, config_.l1i_boundary(), strict),
          Arbiter(policy, config_.l1d_boundary(), strict),
          L1PortSharing(config_.l1i_boundary().outputs, config_.l1d_boundary().outputs)});
    }
    const SourcePath owner{static_cast<std::int32_t>(c), -1, -1, -1};
    clusters_.push_back(ClusterUnit{BankedCache(cfg.l2, Origin::L2, owner, fmt::format("l2[{}]", c)),
                                    Arbiter(policy, config_.l2_boundary(), strict)});
  }
  if (cfg.l3.enabled) {
    l3_ = std::make_unique<L3Unit>(
        L3Unit{BankedCache(cfg.l3, Origin::L3, SourcePath{}, "l3"),
               Arbiter(policy, config_.l3_boundary(), strict)});
  }
  memory_arb_.emplace(policy, config_.memory_boundary(), strict);

  if (options_.trace != nullptr) write_trace_header(*options_.trace);
}

Simulation::~Simulation() = default;

void Simulation::register_request(const MemRequest& req) {
  outstanding_.emplace(req.id, req);
  ++issued_;
  if (options_.trace != nullptr)
    write_trace_record(*options_.trace, TraceRecord{cycle_, req.id, req.address, req.is_write,
                                                    req.origin, req.source});
}

void Simulation::collect_created(CacheBank& bank) {
  for (const auto& r : bank.take_created()) register_request(r);
}

void Simulation::schedule(const MemRequest& req, Cycle when) { completions_[when].push_back(req); }

BankedCache& Simulation::cache_for(const MemRequest& req) {
  const auto& t = config_.topology();
  switch (req.origin) {
    case Origin::Core:
    case Origin::L1D: return sockets_[socket_index(t, req.source)].dcache;
    case Origin::L1I: return sockets_[socket_index(t, req.source)].icache;
    case Origin::L2: return clusters_[static_cast<std::uint32_t>(req.source.cluster)].l2;
    case Origin::L3: return l3_->cache;
  }
  throw ProtocolError(ProtocolErrc::OrphanFill, "unknown origin");
}

void Simulation::deliver_fill(const MemRequest& req) {
  auto& cache = cache_for(req);
  auto& bank = cache.bank_for(req.address);
  const auto waiters = bank.fill(MemResponse{req.id, req.line_address, cycle_}, cycle_, ids_);
  collect_created(bank);
  for (const auto& w : waiters) schedule(w, cycle_ + cache.config().hit_latency);
}

void Simulation::complete(const MemRequest& req) {
  outstanding_.erase(req.id);
  ++completed_;
  progress_ = true;
  if (req.is_write) return;  // store or writeback acknowledged
  if (req.origin == Origin::Core) {
    const auto& t = config_.topology();
    const auto core = socket_index(t, req.source) * t.cores_per_socket +
                      static_cast<std::uint32_t>(req.source.core);
    cores_[core].on_response(req.id, cycle_);
    return;
  }
  deliver_fill(req);
}

void Simulation::phase_responses() {
  for (const auto& resp : hbm_.tick(cycle_)) {
    auto it = outstanding_.find(resp.request_id);
    if (it == outstanding_.end())
      throw ProtocolError(ProtocolErrc::OrphanFill,
                          fmt::format("memory response for unknown request {}", resp.request_id));
    const MemRequest req = it->second;
    complete(req);
  }
  while (!completions_.empty() && completions_.begin()->first <= cycle_) {
    auto batch = std::move(completions_.begin()->second);
    completions_.erase(completions_.begin());
    for (const auto& r : batch) complete(r);
  }
}

void Simulation::phase_access() {
  auto serve = [&](CacheBank& bank) {
    if (!bank.has_input()) return;
    const MemRequest head = bank.input_head();
    const auto out = bank.access(head, cycle_, ids_);
    switch (out.kind) {
      case AccessKind::Hit:
        bank.pop_input();
        schedule(head, out.ready_cycle);
        progress_ = true;
        break;
      case AccessKind::MissIssued:
      case AccessKind::MissMerged:
        bank.pop_input();
        progress_ = true;
        break;
      case AccessKind::StallMshrFull:
      case AccessKind::StallQueueFull:
        break;
    }
    collect_created(bank);
  };
  auto serve_all = [&](BankedCache& cache) {
    for (std::uint32_t b = 0; b < cache.num_banks(); ++b) serve(cache.bank(b));
  };
  for (auto& s : sockets_) {
    serve_all(s.icache);
    serve_all(s.dcache);
  }
  for (auto& c : clusters_) serve_all(c.l2);
  if (l3_) serve_all(l3_->cache);
}

void Simulation::phase_cores() {
  const auto& t = config_.topology();
  for (std::uint32_t i = 0; i < cores_.size(); ++i) {
    SocketPort port(sockets_[i / t.cores_per_socket]);
    auto result = cores_[i].step(cycle_, port, ids_);
    if (result.retired > 0 || !result.issued.empty()) progress_ = true;
    for (const auto& r : result.issued) register_request(r);
  }
}

void Simulation::note_grants(std::uint32_t boundary, const GrantSet& grants) {
  for (const auto& g : grants.grants) {
    fnv_mix(grant_digest_, cycle_);
    fnv_mix(grant_digest_, (std::uint64_t{boundary} << 40) | (std::uint64_t{g.input} << 20) |
                               g.output);
  }
}

namespace {

std::vector<Demand> bank_demands(BankedCache& cache, Cycle now, const ValidatedConfig& cfg,
                                 std::uint32_t outputs) {
  std::vector<Demand> d(cache.num_banks());
  for (std::uint32_t b = 0; b < cache.num_banks(); ++b)
    d[b] = demand_for(cache.bank(b).miss_head(now), cfg, outputs);
  return d;
}

}  // namespace

void Simulation::transfer_l1(std::uint32_t s) {
  auto& unit = sockets_[s];
  auto& l2 = clusters_[s / config_.topology().sockets_per_cluster].l2;

  const auto ig = unit.icache_arb.arbitrate(
      bank_demands(unit.icache, cycle_, config_, unit.icache_arb.num_outputs()));
  const auto dg = unit.dcache_arb.arbitrate(
      bank_demands(unit.dcache, cycle_, config_, unit.dcache_arb.num_outputs()));
  note_grants(2 * s, ig);
  note_grants(2 * s + 1, dg);

  std::vector<bool> iflags(unit.icache_arb.num_outputs()), dflags(unit.dcache_arb.num_outputs());
  for (const auto& g : ig.grants) iflags[g.output] = true;
  for (const auto& g : dg.grants) dflags[g.output] = true;
  const auto owners = unit.sharing.arbitrate(iflags, dflags);

  auto move = [&](BankedCache& cache, Arbiter& arb, const GrantSet& grants, L1Owner who) {
    for (const auto& g : grants.grants) {
      auto& bank = cache.bank(g.input);
      auto& target = l2.bank_for(bank.miss_head(cycle_)->address);
      if (owners[g.output] != who || !target.can_accept()) {
        arb.revoke(g);
        ++revoked_;
        continue;
      }
      target.push_input(bank.drain_miss_queue(1, cycle_).front());
      progress_ = true;
    }
  };
  move(unit.icache, unit.icache_arb, ig, L1Owner::ICache);
  move(unit.dcache, unit.dcache_arb, dg, L1Owner::DCache);
}

void Simulation::transfer_memory(std::vector<Lane>& lanes) {
  auto& arb = *memory_arb_;
  std::vector<Demand> d(lanes.size(), kNoDemand);
  for (std::size_t i = 0; i < lanes.size(); ++i)
    d[i] = demand_for(lanes[i].request, config_, arb.num_outputs());
  const auto grants = arb.arbitrate(d);
  note_grants(0xffff, grants);

  std::vector<bool> moved(lanes.size(), false);
  for (const auto& g : grants.grants) {
    auto& lane = lanes[g.input];
    if (!hbm_.channel_for(lane.request->address).try_enqueue(*lane.request, cycle_)) {
      arb.revoke(g);
      ++revoked_;
      continue;
    }
    lane.bank->drain_miss_queue(1, cycle_);
    moved[g.input] = true;
    progress_ = true;
  }
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (lanes[i].request == nullptr || moved[i]) continue;
    lanes[i].arbiter->revoke(lanes[i].grant);
    ++revoked_;
  }
}

void Simulation::transfer_l2() {
  const auto lanes_per_cluster = config_.l2_boundary().outputs;
  std::vector<Lane> lanes(clusters_.size() * lanes_per_cluster);

  for (std::uint32_t c = 0; c < clusters_.size(); ++c) {
    auto& unit = clusters_[c];
    const auto grants =
        unit.arb.arbitrate(bank_demands(unit.l2, cycle_, config_, unit.arb.num_outputs()));
    note_grants(0x8000 + c, grants);
    for (const auto& g : grants.grants) {
      auto& bank = unit.l2.bank(g.input);
      const MemRequest* head = bank.miss_head(cycle_);
      if (l3_) {
        auto& target = l3_->cache.bank_for(head->address);
        if (!target.can_accept()) {
          unit.arb.revoke(g);
          ++revoked_;
          continue;
        }
        target.push_input(bank.drain_miss_queue(1, cycle_).front());
        progress_ = true;
      } else {
        lanes[c * lanes_per_cluster + g.output] = Lane{head, &bank, &unit.arb, g};
      }
    }
  }
  if (!l3_) transfer_memory(lanes);
}

void Simulation::transfer_l3() {
  if (!l3_) return;
  std::vector<Lane> lanes(l3_->arb.num_outputs());
  const auto grants =
      l3_->arb.arbitrate(bank_demands(l3_->cache, cycle_, config_, l3_->arb.num_outputs()));
  note_grants(0xfff0, grants);
  for (const auto& g : grants.grants) {
    auto& bank = l3_->cache.bank(g.input);
    lanes[g.output] = Lane{bank.miss_head(cycle_), &bank, &l3_->arb, g};
  }
  transfer_memory(lanes);
}

void Simulation::phase_transfer() {
  transfer_l3();
  transfer_l2();
  for (std::uint32_t s = 0; s < sockets_.size(); ++s) transfer_l1(s);
}

bool Simulation::has_timed_work() const {
  if (!completions_.empty() || !hbm_.idle()) return true;
  for (const auto& core : cores_) {
    for (const auto& w : core.warps()) {
      if (w.status == WarpStatus::Busy && w.busy_until > cycle_) return true;
    }
  }
  auto pending = [&](const BankedCache& cache) {
    for (std::uint32_t b = 0; b < cache.num_banks(); ++b) {
      const auto& bank = cache.bank(b);
      if (bank.miss_queue_size() > 0 && bank.miss_head(cycle_) == nullptr) return true;
    }
    return false;
  };
  for (const auto& s : sockets_) {
    if (pending(s.icache) || pending(s.dcache)) return true;
  }
  for (const auto& c : clusters_) {
    if (pending(c.l2)) return true;
  }
  return l3_ && pending(l3_->cache);
}

std::string Simulation::liveness_report() const {
  std::string out = fmt::format("no progress at cycle {} with {} outstanding requests",
                                cycle_, outstanding_.size());
  auto describe = [&](const BankedCache& cache) {
    for (std::uint32_t b = 0; b < cache.num_banks(); ++b) {
      const auto& bank = cache.bank(b);
      if (bank.idle()) continue;
      out += fmt::format("; {} bank {}: input {}, mshr {}, miss queue {}", cache.name(), b,
                         bank.input_queue_size(), bank.mshrs_in_use(), bank.miss_queue_size());
    }
  };
  for (const auto& s : sockets_) {
    describe(s.icache);
    describe(s.dcache);
  }
  for (const auto& c : clusters_) describe(c.l2);
  if (l3_) describe(l3_->cache);
  return out;
}

void Simulation::step() {
  progress_ = false;
  phase_responses();
  phase_access();
  phase_cores();
  phase_transfer();
  max_outstanding_ = std::max<std::uint64_t>(max_outstanding_, outstanding_.size());
  stalled_ = !progress_ && !done() && !has_timed_work();
  ++cycle_;
}

bool Simulation::done() const {
  return outstanding_.empty() &&
         std::all_of(cores_.begin(), cores_.end(), [](const Core& c) { return c.finished(); });
}

SimStats Simulation::run() {
  while (!done()) {
    if (cycle_ >= cycle_cap_)
      throw SimulationError(SimErrc::CycleCapExceeded,
                            fmt::format("cycle cap {} reached with {} requests outstanding",
                                        cycle_cap_, outstanding_.size()),
                            stats());
    step();
    if (stalled_)
      throw SimulationError(SimErrc::DeadlockDetected, liveness_report(), stats());
  }
  return stats();
}

SimStats Simulation::stats() const {
  SimStats st;
  st.cycles = cycle_;
  for (const auto& c : cores_) st.cores += c.counters();
  st.retired = st.cores.retired;
  st.ipc = cycle_ == 0 ? 0.0 : static_cast<double>(st.retired) / static_cast<double>(cycle_);

  for (std::uint32_t s = 0; s < sockets_.size(); ++s) {
    const auto& u = sockets_[s];
    st.l1i += u.icache.counters();
    st.l1d += u.dcache.counters();
    st.l1_icache_port_grants += u.sharing.icache_grants();
    st.l1_dcache_port_grants += u.sharing.dcache_grants();
    st.ports.push_back(port_stats(fmt::format("l1i[{}]", s), u.icache_arb));
    st.ports.push_back(port_stats(fmt::format("l1d[{}]", s), u.dcache_arb));
  }
  for (std::uint32_t c = 0; c < clusters_.size(); ++c) {
    st.l2 += clusters_[c].l2.counters();
    st.ports.push_back(port_stats(fmt::format("l2[{}]", c), clusters_[c].arb));
  }
  if (l3_) {
    st.l3 = l3_->cache.counters();
    st.ports.push_back(port_stats("l3", l3_->arb));
  }
  st.ports.push_back(port_stats("memory", *memory_arb_));

  for (std::uint32_t i = 0; i < hbm_.num_channels(); ++i) {
    ChannelStats ch;
    ch.counters = hbm_.channel(i).counters();
    ch.utilization = cycle_ == 0 ? 0.0
                                 : static_cast<double>(ch.counters.busy_cycles) /
                                       static_cast<double>(cycle_);
    st.channels.push_back(ch);
  }
  st.issued_requests = issued_;
  st.completed_requests = completed_;
  st.max_outstanding = max_outstanding_;
  st.revoked_grants = revoked_;
  st.grant_digest = grant_digest_;
  return st;
}

SimStats run(const ValidatedConfig& config, const WorkloadSpec& workload,
             const RunOptions& options) {
  Simulation sim(config, workload, options);
  return sim.run();
}

namespace {

std::uint64_t parse_uint(const std::string& parameter, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError(ConfigErrc::ParseError,
                      fmt::format("sweep value '{}' for {} is not an unsigned integer", value,
                                  parameter));
  return v;
}

void reset_derived(CacheLevelConfig& c, bool keep_inputs) {
  c.num_banks = 0;
  if (!keep_inputs) c.input_ports = 0;
  c.output_ports = 0;
}

}  // namespace

HierarchyConfig apply_axis_value(const HierarchyConfig& base, const std::string& parameter,
                                 const std::string& value) {
  HierarchyConfig c = base;
  if (parameter == "mem_ports") {
    c.memory.num_channels = static_cast<std::uint32_t>(parse_uint(parameter, value));
    reset_derived(c.l1_icache, true);
    reset_derived(c.l1_dcache, false);
    reset_derived(c.l2, false);
    reset_derived(c.l3, false);
  } else if (parameter == "arbitration") {
    c.arbitration.policy = parse_policy(value);
  } else if (parameter == "channel_latency") {
    c.memory.channel_latency = static_cast<std::uint32_t>(parse_uint(parameter, value));
  } else if (parameter == "l3") {
    if (value == "on" || value == "1" || value == "true") {
      c.l3.enabled = true;
    } else if (value == "off" || value == "0" || value == "false") {
      c.l3.enabled = false;
    } else {
      throw ConfigError(ConfigErrc::ParseError, fmt::format("l3 expects on/off, got '{}'", value));
    }
  } else if (parameter == "seed") {
    c.seed = parse_uint(parameter, value);
  } else {
    throw ConfigError(ConfigErrc::ParseError, fmt::format("unknown sweep parameter '{}'", parameter));
  }
  return c;
}

std::vector<SweepRow> sweep(const HierarchyConfig& base, const SweepAxis& axis,
                            const std::vector<WorkloadSpec>& suite, const SweepOptions& options) {
  std::vector<SweepRow> rows;
  std::vector<ValidatedConfig> validated;
  for (const auto& w : suite) {
    for (const auto& v : axis.values) {
      auto cfg = apply_axis_value(base, axis.parameter, v);
      validated.push_back(validate(cfg));
      rows.push_back(SweepRow{w.name, v, std::move(cfg), std::nullopt, {}});
    }
  }

  RunOptions ro;
  ro.cycle_cap = options.cycle_cap;
  auto work = [&](std::size_t i) {
    const auto& w = suite[i / axis.values.size()];
    try {
      rows[i].stats = run(validated[i], w, ro);
    } catch (const SimulationError& e) {
      rows[i].error = e.what();
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, rows.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace memsim
