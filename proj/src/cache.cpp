#include "memsim/cache.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace memsim {

double CacheCounters::hit_rate() const {
  const auto total = lookups();
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

CacheCounters& CacheCounters::operator+=(const CacheCounters& o) {
  hits += o.hits;
  misses += o.misses;
  merges += o.merges;
  mshr_stalls += o.mshr_stalls;
  queue_stalls += o.queue_stalls;
  writebacks += o.writebacks;
  fills += o.fills;
  return *this;
}

CacheBank::CacheBank(const CacheLevelConfig& config, std::uint32_t bank_id, Origin level,
                     const SourcePath& owner)
    : config_(config),
      bank_id_(bank_id),
      level_(level),
      owner_(owner),
      sets_(config.sets_per_bank()),
      lines_(std::size_t{sets_} * config.ways) {
  recency_.resize(lines_.size());
  for (std::uint32_t s = 0; s < sets_; ++s) {
    for (std::uint32_t w = 0; w < config_.ways; ++w) recency_[s * config_.ways + w] = w;
  }
}

std::uint32_t CacheBank::set_of(Address address) const {
  const Address line = address / config_.line_size;
  return static_cast<std::uint32_t>((line / config_.num_banks) % sets_);
}

CacheBank::Line* CacheBank::find_line(Address line_address) {
  const auto set = set_of(line_address);
  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    auto& l = lines_[set * config_.ways + w];
    if (l.valid && l.line_address == line_address) return &l;
  }
  return nullptr;
}

const CacheBank::Line* CacheBank::find_line(Address line_address) const {
  return const_cast<CacheBank*>(this)->find_line(line_address);
}

bool CacheBank::contains(Address address) const {
  return find_line(line_address_of(address, config_.line_size)) != nullptr;
}

bool CacheBank::is_dirty(Address address) const {
  const auto* l = find_line(line_address_of(address, config_.line_size));
  return l != nullptr && l->dirty;
}

void CacheBank::touch(std::uint32_t set, std::uint32_t way) {
  auto first = recency_.begin() + static_cast<std::ptrdiff_t>(set) * config_.ways;
  auto last = first + config_.ways;
  auto it = std::find(first, last, way);
  std::rotate(first, it, it + 1);
}

std::vector<std::uint32_t> CacheBank::lru_order(std::uint32_t set) const {
  auto first = recency_.begin() + static_cast<std::ptrdiff_t>(set) * config_.ways;
  return {first, first + config_.ways};
}

AccessOutcome CacheBank::access(const MemRequest& req, Cycle now, RequestIdAllocator& ids) {
  if (bank_index(req.address, config_.line_size, config_.num_banks) != bank_id_)
    throw ProtocolError(ProtocolErrc::BankMismatch,
                        fmt::format("request {} for {:#x} routed to bank {}", req.id, req.address,
                                    bank_id_));
  if (req.is_write && level_ == Origin::L1I)
    throw ProtocolError(ProtocolErrc::ICacheWrite,
                        fmt::format("write request {} reached the instruction cache", req.id));
  if (last_access_ && *last_access_ == now)
    throw ProtocolError(ProtocolErrc::BankConflict,
                        fmt::format("bank {} accessed twice in cycle {}", bank_id_, now));

  const Address line = line_address_of(req.address, config_.line_size);
  const auto set = set_of(line);

  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    auto& l = lines_[set * config_.ways + w];
    if (l.valid && l.line_address == line) {
      last_access_ = now;
      touch(set, w);
      if (req.is_write) l.dirty = true;
      ++counters_.hits;
      return {AccessKind::Hit, now + config_.hit_latency};
    }
  }

  auto mshr = std::find_if(mshrs_.begin(), mshrs_.end(),
                           [&](const Mshr& m) { return m.line_address == line; });
  if (mshr != mshrs_.end()) {
    last_access_ = now;
    mshr->waiters.push_back(req);
    ++counters_.merges;
    return {AccessKind::MissMerged, 0};
  }
  if (mshrs_.size() >= config_.mshr_per_bank) {
    ++counters_.mshr_stalls;
    return {AccessKind::StallMshrFull, 0};
  }
  if (miss_queue_.size() >= config_.queue_depth) {
    ++counters_.queue_stalls;
    return {AccessKind::StallQueueFull, 0};
  }

  last_access_ = now;
  mshrs_.push_back({line, {req}});
  const auto fetch = make_request(ids.allocate(), line, false, level_, owner_, config_.line_size, now);
  miss_queue_.push_back({fetch, now + config_.hit_latency});
  created_.push_back(fetch);
  ++counters_.misses;
  return {AccessKind::MissIssued, 0};
}

std::vector<MemRequest> CacheBank::fill(const MemResponse& resp, Cycle now,
                                        RequestIdAllocator& ids) {
  auto mshr = std::find_if(mshrs_.begin(), mshrs_.end(),
                           [&](const Mshr& m) { return m.line_address == resp.line_address; });
  if (mshr == mshrs_.end())
    throw ProtocolError(ProtocolErrc::OrphanFill,
                        fmt::format("fill for {:#x} (request {}) has no MSHR in bank {}",
                                    resp.line_address, resp.request_id, bank_id_));

  const auto set = set_of(resp.line_address);
  const auto base = set * config_.ways;
  std::uint32_t victim = config_.ways;
  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    if (!lines_[base + w].valid) {
      victim = w;
      break;
    }
  }
  if (victim == config_.ways) victim = recency_[base + config_.ways - 1];

  auto& slot = lines_[base + victim];
  if (slot.valid && slot.dirty) {
    const auto wb =
        make_request(ids.allocate(), slot.line_address, true, level_, owner_, config_.line_size, now);
    miss_queue_.push_back({wb, now});
    created_.push_back(wb);
    ++counters_.writebacks;
  }

  std::vector<MemRequest> waiters = std::move(mshr->waiters);
  mshrs_.erase(mshr);

  slot.line_address = resp.line_address;
  slot.valid = true;
  slot.dirty = std::any_of(waiters.begin(), waiters.end(),
                           [](const MemRequest& r) { return r.is_write; });
  touch(set, victim);
  ++counters_.fills;
  return waiters;
}

std::vector<MemRequest> CacheBank::drain_miss_queue(std::uint32_t budget, Cycle now) {
  std::vector<MemRequest> out;
  while (budget > 0 && !miss_queue_.empty() && miss_queue_.front().ready_cycle <= now) {
    out.push_back(miss_queue_.front().request);
    miss_queue_.pop_front();
    --budget;
  }
  return out;
}

const MemRequest* CacheBank::miss_head(Cycle now) const {
  if (miss_queue_.empty() || miss_queue_.front().ready_cycle > now) return nullptr;
  return &miss_queue_.front().request;
}

BankedCache::BankedCache(const CacheLevelConfig& config, Origin level, const SourcePath& owner,
                         std::string name)
    : config_(config), level_(level), name_(std::move(name)) {
  banks_.reserve(config.num_banks);
  for (std::uint32_t b = 0; b < config.num_banks; ++b) banks_.emplace_back(config, b, level, owner);
}

std::uint32_t BankedCache::bank_of(Address address) const {
  return bank_index(address, config_.line_size, config_.num_banks);
}

CacheBank& BankedCache::bank_for(Address address) { return banks_[bank_of(address)]; }

CacheCounters BankedCache::counters() const {
  CacheCounters total;
  for (const auto& b : banks_) total += b.counters();
  return total;
}

bool BankedCache::idle() const {
  return std::all_of(banks_.begin(), banks_.end(), [](const CacheBank& b) { return b.idle(); });
}

}  // namespace memsim
