#include <doctest.h>

#include <random>

#include "memsim/interconnect.hpp"
#include "support.hpp"

using namespace memsim;

namespace {

std::vector<Demand> presence(std::uint32_t n, std::initializer_list<std::uint32_t> on) {
  std::vector<Demand> p(n, kNoDemand);
  for (auto i : on) p[i] = 0;
  return p;
}

GrantSet grants(std::initializer_list<Grant> g) { return GrantSet{std::vector<Grant>(g)}; }

}  // namespace

TEST_CASE("direct mapping") {
  CHECK(arbitrate_direct(presence(4, {0, 1, 2, 3}), 4) ==
        grants({{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
  CHECK(arbitrate_direct(presence(4, {}), 4).empty());
  CHECK(arbitrate_direct(presence(4, {2}), 4) == grants({{2, 2}}));
  try {
    arbitrate_direct(presence(8, {}), 4);
    FAIL("no error");
  } catch (const InterconnectError& e) {
    CHECK(e.code() == InterconnectErrc::PolicyMisuse);
  }
}

TEST_CASE("crossbar") {
  SUBCASE("no conflicts") {
    auto s = make_arbiter_state(ArbitrationPolicy::Crossbar, 8, 8);
    std::vector<Demand> d = {0, 1, 2, 3, 4, 5, 6, 7};
    CHECK(arbitrate_crossbar(d, s).size() == 8);
  }
  SUBCASE("two inputs on one output alternate") {
    auto s = make_arbiter_state(ArbitrationPolicy::Crossbar, 4, 4);
    std::vector<Demand> d = {3, 3, kNoDemand, kNoDemand};
    CHECK(arbitrate_crossbar(d, s) == grants({{0, 3}}));
    CHECK(arbitrate_crossbar(d, s) == grants({{1, 3}}));
    CHECK(arbitrate_crossbar(d, s) == grants({{0, 3}}));
  }
  SUBCASE("eight inputs on output 0") {
    auto s = make_arbiter_state(ArbitrationPolicy::Crossbar, 8, 4);
    std::vector<Demand> d(8, 0);
    std::vector<int> count(8, 0);
    for (int c = 0; c < 8; ++c) {
      const auto g = arbitrate_crossbar(d, s);
      REQUIRE(g.size() == 1);
      ++count[g.grants[0].input];
    }
    for (int n : count) CHECK(n == 1);
  }
}

TEST_CASE("source round-robin") {
  SUBCASE("saturated groups alternate") {
    auto s = make_arbiter_state(ArbitrationPolicy::SourceRoundRobin, 8, 4);
    const auto all = presence(8, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(arbitrate_source_rr(all, s) == grants({{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
    CHECK(arbitrate_source_rr(all, s) == grants({{4, 0}, {5, 1}, {6, 2}, {7, 3}}));
    CHECK(arbitrate_source_rr(all, s) == grants({{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
  }
  SUBCASE("idle group skipped") {
    auto s = make_arbiter_state(ArbitrationPolicy::SourceRoundRobin, 8, 4);
    CHECK(arbitrate_source_rr(presence(8, {5, 7}), s) == grants({{5, 1}, {7, 3}}));
  }
  SUBCASE("nothing pending leaves the pointer alone") {
    auto s = make_arbiter_state(ArbitrationPolicy::SourceRoundRobin, 8, 4);
    s.rr_group_pointer = 1;
    CHECK(arbitrate_source_rr(presence(8, {}), s).empty());
    CHECK(s.rr_group_pointer == 1);
  }
  SUBCASE("strict time slice serves an idle group") {
    auto s = make_arbiter_state(ArbitrationPolicy::SourceRoundRobin, 8, 4, 1, true);
    CHECK(arbitrate_source_rr(presence(8, {5}), s).empty());
    CHECK(arbitrate_source_rr(presence(8, {5}), s) == grants({{5, 1}}));
  }
  SUBCASE("indivisible") {
    CHECK_THROWS_AS(make_arbiter_state(ArbitrationPolicy::SourceRoundRobin, 6, 4),
                    InterconnectError);
  }
}

TEST_CASE("distributed round-robin") {
  SUBCASE("2 groups x 4 inputs onto 4 outputs") {
    auto s = make_arbiter_state(ArbitrationPolicy::DistributedRoundRobin, 8, 4, 2);
    const auto all = presence(8, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(arbitrate_distributed_rr(all, s) == grants({{0, 0}, {1, 1}, {4, 2}, {5, 3}}));
    CHECK(arbitrate_distributed_rr(all, s) == grants({{2, 0}, {3, 1}, {6, 2}, {7, 3}}));
    CHECK(arbitrate_distributed_rr(all, s) == grants({{0, 0}, {1, 1}, {4, 2}, {5, 3}}));
  }
  SUBCASE("one group with equal ports is direct") {
    auto s = make_arbiter_state(ArbitrationPolicy::DistributedRoundRobin, 4, 4, 1);
    std::mt19937 rng(3);
    for (int c = 0; c < 50; ++c) {
      std::vector<Demand> p(4);
      for (auto& x : p) x = rng() % 2 ? 0 : kNoDemand;
      CHECK(arbitrate_distributed_rr(p, s) == arbitrate_direct(p, 4));
    }
  }
  SUBCASE("lone pending port waits for its window") {
    auto s = make_arbiter_state(ArbitrationPolicy::DistributedRoundRobin, 8, 4, 2);
    const auto p = presence(8, {3});
    CHECK(arbitrate_distributed_rr(p, s).empty());
    CHECK(arbitrate_distributed_rr(p, s) == grants({{3, 1}}));
  }
  SUBCASE("indivisible groups") {
    try {
      make_arbiter_state(ArbitrationPolicy::DistributedRoundRobin, 6, 3, 2);
      FAIL("no error");
    } catch (const InterconnectError& e) {
      CHECK(e.code() == InterconnectErrc::GroupIndivisible);
    }
  }
}

TEST_CASE("grant legality and throughput ceiling on random traffic") {
  std::mt19937 rng(17);
  struct Shape {
    ArbitrationPolicy policy;
    std::uint32_t in, out, groups;
  };
  const Shape shapes[] = {{ArbitrationPolicy::Crossbar, 8, 4, 1},
                          {ArbitrationPolicy::Crossbar, 5, 3, 1},
                          {ArbitrationPolicy::SourceRoundRobin, 8, 2, 1},
                          {ArbitrationPolicy::SourceRoundRobin, 16, 8, 1},
                          {ArbitrationPolicy::DistributedRoundRobin, 8, 4, 2},
                          {ArbitrationPolicy::DistributedRoundRobin, 16, 4, 4},
                          {ArbitrationPolicy::Direct, 4, 4, 1}};
  for (const auto& sh : shapes) {
    auto s = make_arbiter_state(sh.policy, sh.in, sh.out, sh.groups);
    for (int c = 0; c < 2000; ++c) {
      std::vector<Demand> p(sh.in);
      for (auto& x : p) x = rng() % 3 == 0 ? kNoDemand : static_cast<Demand>(rng() % sh.out);
      const auto g = arbitrate(p, s);
      CHECK(g.is_legal(sh.in, sh.out));
      CHECK(g.size() <= sh.out);
      const bool any = std::any_of(p.begin(), p.end(), [](Demand d) { return d != kNoDemand; });
      if (any && (sh.policy == ArbitrationPolicy::Crossbar ||
                  sh.policy == ArbitrationPolicy::SourceRoundRobin))
        CHECK_FALSE(g.empty());
    }
  }
}

TEST_CASE("is_legal rejects duplicates") {
  CHECK(grants({{0, 0}, {1, 1}}).is_legal(2, 2));
  CHECK_FALSE(grants({{0, 0}, {0, 1}}).is_legal(2, 2));
  CHECK_FALSE(grants({{0, 1}, {1, 1}}).is_legal(2, 2));
  CHECK_FALSE(grants({{2, 0}}).is_legal(2, 2));
}

TEST_CASE("no starvation, small instances") {
  using testing::exhaustive_starvation;
  using testing::starvation_bound;
  for (std::uint32_t in = 1; in <= 5; ++in) {
    for (std::uint32_t out = 1; out <= std::min(in, 3u); ++out) {
      const auto r = exhaustive_starvation(ArbitrationPolicy::Crossbar, in, out, 1);
      CAPTURE(in);
      CAPTURE(out);
      CHECK_FALSE(r.illegal_grant);
      CHECK_FALSE(r.missing_grant);
      CHECK(r.worst_delay <= starvation_bound(ArbitrationPolicy::Crossbar, in, out, 1));
      if (in % out == 0) {
        const auto b = exhaustive_starvation(ArbitrationPolicy::SourceRoundRobin, in, out, 1);
        CHECK_FALSE(b.missing_grant);
        CHECK(b.worst_delay == starvation_bound(ArbitrationPolicy::SourceRoundRobin, in, out, 1));
      }
    }
  }
  const auto c = exhaustive_starvation(ArbitrationPolicy::DistributedRoundRobin, 8, 4, 2);
  CHECK_FALSE(c.missing_grant);
  CHECK(c.worst_delay == 2);
}

TEST_CASE("Arbiter wrapper") {
  SUBCASE("equal ports ignore the policy") {
    Arbiter a(ArbitrationPolicy::SourceRoundRobin, BoundaryShape{4, 4, 2});
    CHECK(a.state().policy == ArbitrationPolicy::Direct);
  }
  SUBCASE("counters and revoke") {
    Arbiter a(ArbitrationPolicy::Crossbar, BoundaryShape{4, 2, 1});
    std::vector<Demand> d = {0, 0, 1, kNoDemand};
    const auto g = a.arbitrate(d);
    REQUIRE(g.size() == 2);
    CHECK(a.counters().total_grants() == 2);
    CHECK(a.counters().stall_cycles == 1);
    CHECK(a.counters().busy_cycles == 1);
    a.revoke(g.grants[0]);
    CHECK(a.counters().total_grants() == 1);
    CHECK(a.counters().stall_cycles == 2);
  }
}

TEST_CASE("L1 port sharing") {
  SUBCASE("1 icache port, 4 dcache ports") {
    L1PortSharing s(1, 4);
    CHECK(s.combined_ports() == 4);
    CHECK(s.shared_ports() == 1);
    const auto o = s.arbitrate({true}, {true, true, true, true});
    CHECK(o == std::vector<L1Owner>{L1Owner::ICache, L1Owner::DCache, L1Owner::DCache,
                                    L1Owner::DCache});
  }
  SUBCASE("2 icache ports share the first two") {
    L1PortSharing s(2, 4);
    CHECK(s.shared_ports() == 2);
    auto o = s.arbitrate({true, true}, {true, true, false, false});
    CHECK(o[0] == L1Owner::ICache);
    CHECK(o[1] == L1Owner::ICache);
    o = s.arbitrate({true, true}, {true, true, false, false});
    CHECK(o[0] == L1Owner::DCache);
    CHECK(o[1] == L1Owner::DCache);
  }
  SUBCASE("10 contended cycles split 5/5") {
    L1PortSharing s(1, 4);
    for (int c = 0; c < 10; ++c) s.arbitrate({true}, {true, false, false, false});
    CHECK(s.icache_grants() == 5);
    CHECK(s.dcache_grants() == 5);
    CHECK(s.contended_cycles() == 10);
  }
  SUBCASE("uncontended port goes to whoever asks") {
    L1PortSharing s(1, 4);
    CHECK(s.arbitrate({false}, {true, false, false, false})[0] == L1Owner::DCache);
    CHECK(s.arbitrate({false}, {true, false, false, false})[0] == L1Owner::DCache);
    CHECK(s.arbitrate({true}, {false, false, false, false})[0] == L1Owner::ICache);
  }
}
