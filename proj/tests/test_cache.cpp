#include <doctest.h>

#include <random>

#include "memsim/cache.hpp"
#include "support.hpp"

using namespace memsim;

namespace {

CacheLevelConfig small_cache(std::uint32_t banks = 1, std::uint32_t ways = 2,
                             std::uint64_t capacity = 1024) {
  CacheLevelConfig c;
  c.capacity_bytes = capacity;
  c.ways = ways;
  c.line_size = 64;
  c.num_banks = banks;
  c.mshr_per_bank = 4;
  c.hit_latency = 2;
  c.queue_depth = 4;
  return c;
}

MemRequest req(RequestIdAllocator& ids, Address a, bool write = false) {
  return make_request(ids.allocate(), a, write, Origin::Core, SourcePath{0, 0, 0, 0}, 64, 0);
}

MemResponse resp_for(const MemRequest& fetch) { return {fetch.id, fetch.line_address, 0}; }

}  // namespace

TEST_CASE("cold miss, fill, hit") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(), 0, Origin::L1D, SourcePath{0, 0, -1, -1});
  const auto r = req(ids, 0x1000);
  CHECK(bank.access(r, 1, ids).kind == AccessKind::MissIssued);
  CHECK(bank.mshrs_in_use() == 1);
  CHECK(bank.miss_head(1) == nullptr);  // not before the lookup latency
  REQUIRE(bank.miss_head(3) != nullptr);
  const auto fetch = *bank.miss_head(3);
  CHECK(fetch.line_address == 0x1000);
  CHECK(fetch.origin == Origin::L1D);
  CHECK_FALSE(fetch.is_write);

  CHECK(bank.drain_miss_queue(1, 3) == std::vector<MemRequest>{fetch});
  const auto waiters = bank.fill(resp_for(fetch), 10, ids);
  CHECK(waiters == std::vector<MemRequest>{r});
  CHECK(bank.mshrs_in_use() == 0);
  CHECK(bank.contains(0x1010));

  const auto again = bank.access(req(ids, 0x1020), 11, ids);
  CHECK(again.kind == AccessKind::Hit);
  CHECK(again.ready_cycle == 13);
}

TEST_CASE("MSHR merge issues one downstream request") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(), 0, Origin::L1D, {});
  const auto a = req(ids, 0x40), b = req(ids, 0x44), c = req(ids, 0x7c);
  CHECK(bank.access(a, 1, ids).kind == AccessKind::MissIssued);
  CHECK(bank.access(b, 2, ids).kind == AccessKind::MissMerged);
  CHECK(bank.access(c, 3, ids).kind == AccessKind::MissMerged);
  CHECK(bank.miss_queue_size() == 1);
  CHECK(bank.take_created().size() == 1);
  const auto fetch = bank.drain_miss_queue(4, 10);
  REQUIRE(fetch.size() == 1);
  CHECK(bank.fill(resp_for(fetch[0]), 20, ids) == std::vector<MemRequest>{a, b, c});
  CHECK(bank.counters().misses == 1);
  CHECK(bank.counters().merges == 2);
}

TEST_CASE("stalls") {
  RequestIdAllocator ids;
  auto cfg = small_cache(1, 2, 4096);
  cfg.mshr_per_bank = 2;
  CacheBank bank(cfg, 0, Origin::L2, {});
  CHECK(bank.access(req(ids, 0x000), 1, ids).kind == AccessKind::MissIssued);
  CHECK(bank.access(req(ids, 0x040), 2, ids).kind == AccessKind::MissIssued);
  CHECK(bank.access(req(ids, 0x080), 3, ids).kind == AccessKind::StallMshrFull);
  CHECK(bank.counters().mshr_stalls == 1);
  // A stall is not an access: the same cycle may still serve the bank.
  CHECK(bank.access(req(ids, 0x000), 3, ids).kind == AccessKind::MissMerged);

  cfg.mshr_per_bank = 8;
  cfg.queue_depth = 2;
  CacheBank q(cfg, 0, Origin::L2, {});
  CHECK(q.access(req(ids, 0x000), 1, ids).kind == AccessKind::MissIssued);
  CHECK(q.access(req(ids, 0x040), 2, ids).kind == AccessKind::MissIssued);
  CHECK(q.access(req(ids, 0x080), 3, ids).kind == AccessKind::StallQueueFull);
  q.drain_miss_queue(1, 10);
  CHECK(q.access(req(ids, 0x080), 11, ids).kind == AccessKind::MissIssued);
}

TEST_CASE("dirty eviction queues one writeback") {
  RequestIdAllocator ids;
  // 1 set, 2 ways.
  CacheBank bank(small_cache(1, 2, 128), 0, Origin::L1D, SourcePath{0, 0, -1, -1});
  auto install = [&](Address a, bool write, Cycle t) {
    CHECK(bank.access(req(ids, a, write), t, ids).kind == AccessKind::MissIssued);
    const auto f = bank.drain_miss_queue(1, t + 10);
    REQUIRE(f.size() == 1);
    bank.fill(resp_for(f[0]), t + 10, ids);
  };
  install(0x000, true, 1);   // dirty
  install(0x040, false, 20);
  CHECK(bank.is_dirty(0x000));
  (void)bank.take_created();
  install(0x080, false, 40);  // evicts 0x000 (LRU)
  CHECK_FALSE(bank.contains(0x000));
  CHECK(bank.miss_queue_size() == 1);
  const auto wb = bank.drain_miss_queue(1, 50);
  REQUIRE(wb.size() == 1);
  CHECK(wb[0].is_write);
  CHECK(wb[0].line_address == 0x000);
  CHECK(wb[0].origin == Origin::L1D);
  CHECK(bank.counters().writebacks == 1);

  install(0x0c0, false, 60);  // evicts clean 0x040
  CHECK(bank.miss_queue_size() == 0);
}

TEST_CASE("write hit marks the line dirty") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(), 0, Origin::L1D, {});
  bank.access(req(ids, 0x0), 1, ids);
  bank.fill(resp_for(bank.drain_miss_queue(1, 5)[0]), 5, ids);
  CHECK_FALSE(bank.is_dirty(0x0));
  CHECK(bank.access(req(ids, 0x8, true), 6, ids).kind == AccessKind::Hit);
  CHECK(bank.is_dirty(0x0));
}

TEST_CASE("drain_miss_queue is FIFO with a budget") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(), 0, Origin::L2, {});
  bank.access(req(ids, 0x000), 1, ids);
  bank.access(req(ids, 0x040), 2, ids);
  const auto created = bank.take_created();
  REQUIRE(created.size() == 2);
  CHECK(bank.drain_miss_queue(0, 10).empty());
  CHECK(bank.drain_miss_queue(1, 10) == std::vector<MemRequest>{created[0]});
  CHECK(bank.drain_miss_queue(1, 10) == std::vector<MemRequest>{created[1]});
  CHECK(bank.drain_miss_queue(1, 10).empty());
}

TEST_CASE("protocol violations") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(2), 1, Origin::L1I, {});
  auto code = [&](auto&& f) {
    try {
      f();
    } catch (const ProtocolError& e) {
      return e.code();
    }
    FAIL("no error");
    return ProtocolErrc::OrphanFill;
  };
  CHECK(code([&] { bank.access(req(ids, 0x000), 1, ids); }) == ProtocolErrc::BankMismatch);
  CHECK(code([&] { bank.access(req(ids, 0x040, true), 1, ids); }) == ProtocolErrc::ICacheWrite);
  CHECK(code([&] { bank.fill({99, 0x40, 0}, 1, ids); }) == ProtocolErrc::OrphanFill);
  bank.access(req(ids, 0x040), 2, ids);
  CHECK(code([&] { bank.access(req(ids, 0x0c0), 2, ids); }) == ProtocolErrc::BankConflict);
}

TEST_CASE("LRU order is a permutation and tracks recency") {
  RequestIdAllocator ids;
  CacheBank bank(small_cache(1, 4, 256), 0, Origin::L2, {});  // 1 set, 4 ways
  Cycle t = 1;
  for (Address a : {0x000, 0x040, 0x080, 0x0c0}) {
    bank.access(req(ids, a), t, ids);
    bank.fill(resp_for(bank.drain_miss_queue(1, t + 5)[0]), t + 5, ids);
    t += 10;
  }
  auto order = bank.lru_order(0);
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(order.front() == 3);  // way of 0x0c0
  bank.access(req(ids, 0x000), t, ids);
  CHECK(bank.lru_order(0).front() == 0);
}

TEST_CASE("banked cache routes by line") {
  BankedCache c(small_cache(4, 2, 4096), Origin::L2, {}, "l2");
  CHECK(c.num_banks() == 4);
  CHECK(c.bank_of(0x000) == 0);
  CHECK(c.bank_of(0x0c0) == 3);
  CHECK(c.bank_of(0x100) == 0);
  CHECK(c.idle());
}

TEST_CASE("miss count equals a flat LRU model") {
  std::mt19937_64 rng(2024);
  for (int trace = 0; trace < 20; ++trace) {
    const std::uint32_t banks = 1u << (rng() % 3);
    const std::uint32_t ways = 1u << (rng() % 4);
    const std::uint64_t sets = 1u << (rng() % 4);
    auto cfg = small_cache(banks, ways, banks * ways * sets * 64);
    BankedCache cache(cfg, Origin::L2, {}, "dut");
    testing::FlatLru ref(banks * sets, ways, 64);
    RequestIdAllocator ids;

    const std::uint64_t span = banks * ways * sets * 64 * (1 + rng() % 4);
    std::uint64_t ref_misses = 0;
    Cycle t = 1;
    for (int i = 0; i < 2000; ++i) {
      const Address a = rng() % span;
      const bool w = rng() % 4 == 0;
      if (!ref.access(a)) ++ref_misses;
      auto& bank = cache.bank_for(a);
      const auto out = bank.access(req(ids, a, w), t, ids);
      REQUIRE(out.kind != AccessKind::StallMshrFull);
      if (out.kind == AccessKind::MissIssued) {
        auto fetch = bank.drain_miss_queue(1, t + cfg.hit_latency);
        REQUIRE(fetch.size() == 1);
        bank.fill(resp_for(fetch[0]), t + cfg.hit_latency, ids);
      }
      bank.drain_miss_queue(16, t + cfg.hit_latency);  // writebacks
      t += 4;
    }
    CHECK(cache.counters().misses == ref_misses);
  }
}
