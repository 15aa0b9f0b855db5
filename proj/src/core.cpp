#include "memsim/core.hpp"

#include <algorithm>

namespace memsim {

std::vector<Address> coalesce_lines(std::span<const Address> addresses, std::uint32_t line_size) {
  std::vector<Address> lines;
  lines.reserve(addresses.size());
  for (auto a : addresses) {
    const auto line = line_address_of(a, line_size);
    if (std::find(lines.begin(), lines.end(), line) == lines.end()) lines.push_back(line);
  }
  return lines;
}

std::vector<MemRequest> coalesce(std::span<const Address> addresses, std::uint32_t line_size,
                                 bool is_write, const SourcePath& source, RequestIdAllocator& ids,
                                 Cycle now) {
  std::vector<MemRequest> out;
  for (auto line : coalesce_lines(addresses, line_size))
    out.push_back(make_request(ids.allocate(), line, is_write, Origin::Core, source, line_size, now));
  return out;
}

std::optional<std::uint32_t> schedule_warp(std::span<const WarpState> warps,
                                           std::optional<std::uint32_t> last, Cycle now) {
  const auto n = static_cast<std::uint32_t>(warps.size());
  const std::uint32_t start = last ? (*last + 1) % n : 0;
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto w = (start + k) % n;
    const auto& s = warps[w];
    if (s.status == WarpStatus::Ready) return w;
    if (s.status == WarpStatus::Busy && s.busy_until <= now) return w;
  }
  return std::nullopt;
}

double CoreCounters::coalescing_ratio() const {
  return issued_requests == 0
             ? 0.0
             : static_cast<double>(thread_accesses) / static_cast<double>(issued_requests);
}

CoreCounters& CoreCounters::operator+=(const CoreCounters& o) {
  retired += o.retired;
  issued_requests += o.issued_requests;
  memory_instructions += o.memory_instructions;
  thread_accesses += o.thread_accesses;
  port_stall_cycles += o.port_stall_cycles;
  idle_cycles += o.idle_cycles;
  icache_fetches += o.icache_fetches;
  return *this;
}

Core::Core(const SourcePath& where, std::vector<Program> programs, std::uint32_t line_size,
           const CoreConfig& config)
    : where_(where), programs_(std::move(programs)), line_size_(line_size), config_(config) {
  warps_.resize(programs_.size());
  for (std::uint32_t w = 0; w < warps_.size(); ++w) {
    warps_[w].id = w;
    if (programs_[w].empty()) warps_[w].status = WarpStatus::Finished;
  }
}

std::uint64_t Core::program_length() const {
  std::uint64_t n = 0;
  for (const auto& p : programs_) n += p.size();
  return n;
}

bool Core::finished() const {
  return std::all_of(warps_.begin(), warps_.end(),
                     [](const WarpState& w) { return w.status == WarpStatus::Finished; });
}

StepResult Core::step(Cycle now, LsuPort& port, RequestIdAllocator& ids) {
  StepResult result;

  if (fetch_pending_) {
    SourcePath src = where_;
    src.warp = -1;
    const Address addr = kCodeBase + (fetch_seq_ * line_size_) % config_.code_footprint_bytes;
    const auto req = make_request(ids.allocate(), addr, false, Origin::Core, src, line_size_, now);
    if (port.try_fetch(req)) {
      fetch_pending_ = false;
      ++fetch_seq_;
      ++counters_.icache_fetches;
      result.issued.push_back(req);
    }
  }

  const auto pick = schedule_warp(warps_, last_scheduled_, now);
  if (!pick) {
    ++counters_.idle_cycles;
    return result;
  }
  last_scheduled_ = *pick;
  auto& warp = warps_[*pick];
  warp.status = WarpStatus::Ready;
  const auto& instr = programs_[*pick][warp.pc];

  auto retire = [&] {
    ++warp.retired;
    ++result.retired;
    ++counters_.retired;
    ++retired_since_fetch_;
  };

  if (instr.kind == Instruction::Kind::Compute) {
    ++warp.pc;
    retire();
    warp.status = WarpStatus::Busy;
    warp.busy_until = now + instr.duration;
  } else {
    SourcePath src = where_;
    src.warp = static_cast<std::int32_t>(*pick);
    const bool is_store = instr.kind == Instruction::Kind::Store;
    auto reqs = coalesce(instr.addresses, line_size_, is_store, src, ids, now);
    if (!port.try_issue(reqs)) {
      ++counters_.port_stall_cycles;
      return result;
    }
    ++counters_.memory_instructions;
    counters_.thread_accesses += instr.addresses.size();
    counters_.issued_requests += reqs.size();
    ++warp.pc;
    if (is_store) {
      retire();
    } else {
      warp.status = WarpStatus::WaitingMem;
      for (const auto& r : reqs) warp.outstanding.push_back(r.id);
    }
    result.issued.insert(result.issued.end(), reqs.begin(), reqs.end());
  }

  if (warp.pc == programs_[*pick].size() && warp.status != WarpStatus::WaitingMem)
    warp.status = WarpStatus::Finished;

  if (retired_since_fetch_ >= config_.icache_fetch_interval) {
    retired_since_fetch_ -= config_.icache_fetch_interval;
    fetch_pending_ = true;
  }
  return result;
}

bool Core::on_response(RequestId id, Cycle /*now*/) {
  for (auto& warp : warps_) {
    auto it = std::find(warp.outstanding.begin(), warp.outstanding.end(), id);
    if (it == warp.outstanding.end()) continue;
    warp.outstanding.erase(it);
    if (!warp.outstanding.empty()) return false;
    ++warp.retired;
    ++counters_.retired;
    ++retired_since_fetch_;
    if (retired_since_fetch_ >= config_.icache_fetch_interval) {
      retired_since_fetch_ -= config_.icache_fetch_interval;
      fetch_pending_ = true;
    }
    warp.status = warp.pc == programs_[warp.id].size() ? WarpStatus::Finished : WarpStatus::Ready;
    return true;
  }
  return false;
}

}  // namespace memsim
