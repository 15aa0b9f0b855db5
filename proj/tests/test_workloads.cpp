#include <doctest.h>

#include <cmath>
#include <set>

#include "memsim/workloads.hpp"

using namespace memsim;

namespace {

TopologyConfig topo(std::uint32_t threads = 4) {
  TopologyConfig t;
  t.threads_per_warp = threads;
  return t;
}

std::vector<const Instruction*> memory_ops(const Program& p) {
  std::vector<const Instruction*> out;
  for (const auto& i : p)
    if (i.is_memory()) out.push_back(&i);
  return out;
}

WorkloadSpec spec(AccessPattern pattern, double cpm = 1.0) {
  WorkloadSpec s;
  s.name = "t";
  s.pattern = pattern;
  s.compute_per_mem = cpm;
  s.instructions_per_warp = 64;
  return s;
}

}  // namespace

TEST_CASE("contiguous: warp 0 reads the first elements") {
  const auto progs = generate(spec(Contiguous{}), topo(), 64);
  REQUIRE(progs.size() == topo().total_warps());
  const auto ops = memory_ops(progs[0]);
  REQUIRE_FALSE(ops.empty());
  CHECK(ops[0]->kind == Instruction::Kind::Load);
  CHECK(ops[0]->addresses == std::vector<Address>{0, 4, 8, 12});
  // warp 1 continues where warp 0 stopped
  CHECK(memory_ops(progs[1])[0]->addresses == std::vector<Address>{16, 20, 24, 28});
}

TEST_CASE("strided warps start one stride apart") {
  const auto progs = generate(spec(Strided{192}), topo(), 64);
  CHECK(memory_ops(progs[0])[0]->addresses.front() == 0);
  CHECK(memory_ops(progs[1])[0]->addresses.front() == 192);
  CHECK(memory_ops(progs[1])[0]->addresses == std::vector<Address>{192, 196, 200, 204});
}

TEST_CASE("transpose reads down a column") {
  const auto progs = generate(spec(Transpose{8, 16}), topo(), 64);
  const auto& a = memory_ops(progs[0])[0]->addresses;
  CHECK(a == std::vector<Address>{0, 64, 128, 192});
}

TEST_CASE("irregular is deterministic in the seeds") {
  const auto s = spec(Irregular{7});
  CHECK(generate(s, topo(), 64, 3) == generate(s, topo(), 64, 3));
  CHECK(generate(s, topo(), 64, 3) != generate(s, topo(), 64, 4));
  CHECK(generate(s, topo(), 64, 3) != generate(spec(Irregular{8}), topo(), 64, 3));
  for (const auto& p : generate(s, topo(), 64, 3))
    for (const auto* op : memory_ops(p))
      for (auto a : op->addresses) {
        CHECK(a < s.footprint_bytes);
        CHECK(a % s.element_bytes == 0);
      }
}

TEST_CASE("memory instruction share follows compute_per_mem") {
  for (double cpm : {0.0, 0.5, 1.0, 3.0, 8.0}) {
    for (std::uint32_t n : {1u, 7u, 64u, 512u}) {
      auto s = spec(Contiguous{}, cpm);
      s.instructions_per_warp = n;
      const auto progs = generate(s, topo(), 64);
      const auto expected = static_cast<std::size_t>(std::floor(n / (1.0 + cpm) + 1e-9));
      for (const auto& p : progs) {
        CHECK(p.size() == n);
        CHECK(memory_ops(p).size() == expected);
      }
    }
  }
}

TEST_CASE("stores every n-th memory instruction, in the upper half") {
  auto s = spec(Contiguous{});
  s.store_every = 3;
  const auto progs = generate(s, topo(), 64);
  const auto ops = memory_ops(progs[0]);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const bool store = i % 3 == 2;
    CHECK((ops[i]->kind == Instruction::Kind::Store) == store);
    for (auto a : ops[i]->addresses) CHECK((a >= s.footprint_bytes / 2) == store);
  }
}

TEST_CASE("contiguous loads coalesce to the minimum line count") {
  for (std::uint32_t threads : {1u, 4u, 16u, 32u}) {
    for (std::uint32_t elem : {4u, 8u, 16u}) {
      auto s = spec(Contiguous{});
      s.element_bytes = elem;
      const std::uint32_t line = 64;
      const auto expected = (threads * elem + line - 1) / line;
      for (const auto& p : generate(s, topo(threads), line))
        for (const auto* op : memory_ops(p)) CHECK(coalesce_lines(op->addresses, line).size() == expected);
    }
  }
}

TEST_CASE("builtin suite") {
  const auto suite = builtin_suite();
  REQUIRE(suite.size() == 5);
  CHECK(builtin_names() == std::vector<std::string>{"conv3", "sgemm", "bfs", "transpose", "vecadd"});
  const auto min_compute_bound = std::min(suite[0].compute_per_mem, suite[1].compute_per_mem);
  for (std::size_t i = 2; i < 5; ++i) CHECK(suite[i].compute_per_mem < min_compute_bound);
  CHECK(std::holds_alternative<Irregular>(find_builtin("bfs")->pattern));
  CHECK_FALSE(find_builtin("nope").has_value());
  for (const auto& s : suite) CHECK_NOTHROW(generate(s, topo(), 64));
}

TEST_CASE("invalid specs") {
  auto bad = [](auto mutate) {
    auto s = spec(Contiguous{});
    mutate(s);
    CHECK_THROWS_AS(generate(s, topo(), 64), WorkloadError);
  };
  bad([](WorkloadSpec& s) { s.instructions_per_warp = 0; });
  bad([](WorkloadSpec& s) { s.element_bytes = 0; });
  bad([](WorkloadSpec& s) { s.compute_per_mem = -1; });
  bad([](WorkloadSpec& s) { s.compute_per_mem = NAN; });
  bad([](WorkloadSpec& s) { s.footprint_bytes = 32; });
  bad([](WorkloadSpec& s) { s.pattern = Strided{2}; });
  bad([](WorkloadSpec& s) { s.pattern = Transpose{0, 4}; });
  bad([](WorkloadSpec& s) { s.pattern = Transpose{4096, 4096}; });
}

TEST_CASE("workloads from JSON") {
  const auto w = parse_workloads(R"({"workloads": [
    {"name": "a", "pattern": "strided", "stride": 256, "compute_per_mem": 2},
    {"name": "b", "pattern": "irregular", "seed": 5, "store_every": 4}]})");
  REQUIRE(w.size() == 2);
  CHECK(w[0].pattern == AccessPattern{Strided{256}});
  CHECK(w[0].compute_per_mem == 2.0);
  CHECK(w[1].pattern == AccessPattern{Irregular{5}});
  CHECK(w[1].store_every == 4);
  CHECK(parse_workloads(R"({"seed": 3})").empty());

  auto code = [](std::string_view text) {
    try {
      parse_workloads(text);
    } catch (const ConfigError& e) {
      return e.code();
    }
    FAIL("no error");
    return ConfigErrc::ZeroField;
  };
  CHECK(code(R"({"workloads": [{"name": "a"}]})") == ConfigErrc::MissingField);
  CHECK(code(R"({"workloads": [{"name": "a", "pattern": "zigzag"}]})") == ConfigErrc::ParseError);
  CHECK(code(R"({"workloads": [{"name": "a", "pattern": "contiguous", "x": 1}]})") ==
        ConfigErrc::ParseError);
  CHECK(code(R"({"workloads": {}})") == ConfigErrc::ParseError);
  CHECK(code("{") == ConfigErrc::ParseError);
}

TEST_CASE("programs from a trace") {
  const auto t = topo();
  std::vector<TraceRecord> recs = {
      {0, 1, 0x40, false, Origin::Core, SourcePath{1, 0, 2, 3}},
      {1, 2, 0x80, true, Origin::Core, SourcePath{1, 0, 2, 3}},
      {2, 3, 0xc0, false, Origin::L1D, SourcePath{1, 0, -1, -1}},
      {3, 4, 0x100, false, Origin::Core, SourcePath{0, 0, 0, -1}},  // instruction fetch
  };
  const auto progs = programs_from_trace(recs, t);
  REQUIRE(progs.size() == t.total_warps());
  const auto& p = progs[global_warp_index(t, SourcePath{1, 0, 2, 3})];
  REQUIRE(p.size() == 2);
  CHECK(p[0] == Instruction::load({0x40, 0x40, 0x40, 0x40}));
  CHECK(p[1].kind == Instruction::Kind::Store);
  std::size_t total = 0;
  for (const auto& q : progs) total += q.size();
  CHECK(total == 2);

  recs.push_back({4, 5, 0, false, Origin::Core, SourcePath{5, 0, 0, 0}});
  CHECK_THROWS_AS(programs_from_trace(recs, t), WorkloadError);
}

TEST_CASE("global warp index") {
  const auto t = topo();
  CHECK(global_warp_index(t, SourcePath{0, 0, 0, 0}) == 0);
  CHECK(global_warp_index(t, SourcePath{0, 0, 1, 0}) == 4);
  CHECK(global_warp_index(t, SourcePath{1, 0, 0, 0}) == 16);
  CHECK(global_warp_index(t, SourcePath{1, 0, 3, 3}) == 31);
}
