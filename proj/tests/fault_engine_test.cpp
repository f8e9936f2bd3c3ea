#include "vmsim/fault_engine.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace vmsim {
namespace {

constexpr std::uint64_t kPage = 0x1000;

SimConfig small_config() {
  SimConfig c;
  c.layout = {0x10000, 0x200000, Direction::Down};
  c.store_capacity = 0x1000000;
  return c;
}

// Maps one VMA at exactly [start, end) by allocating top-down from an
// otherwise empty layout whose hi equals `end`.
Simulator single_vma(const Policy& policy, Addr start, Addr end, Direction dir = Direction::Down,
                     std::uint64_t capacity = 0x1000000) {
  SimConfig c;
  c.layout = {start, end, dir};
  c.store_capacity = capacity;
  Simulator sim(c, policy);
  sim.mmap(MmapOp{end - start, dir, Prot::rw()});
  return sim;
}

std::size_t oracle_of(const Simulator& sim) {
  const auto pages = sim.host().expand_pages();
  return oracle_vma_count(pages, sim.config().page_size);
}

TEST(HandleFault, FixedDescendingCoalesces) {
  auto sim = single_vma(Policy::fixed(1), 0x90000, 0xA0000);
  sim.handle_fault({0x9F000, Access::Write, 1});
  sim.handle_fault({0x9E000, Access::Write, 2});
  EXPECT_EQ(sim.host().vma_count(), 1u);
  EXPECT_EQ(oracle_of(sim), 1u);
  EXPECT_LT(sim.host().find(0x9E000)->file_offset + kPage, 0x1000000u + 1);
}

TEST(HandleFault, LegacyDescendingFragments) {
  auto sim = single_vma(Policy::legacy(1), 0x90000, 0xA0000);
  auto a = sim.handle_fault({0x9F000, Access::Write, 1});
  auto b = sim.handle_fault({0x9E000, Access::Write, 2});
  EXPECT_EQ(a.at(0).file_offset, 0x0u);
  EXPECT_EQ(a.at(0).offset_direction, Direction::Up);
  EXPECT_EQ(sim.host().vma_count(), 2u);
  EXPECT_EQ(oracle_of(sim), 2u);
  // Inference is honoured once a last fault exists.
  EXPECT_EQ(b.at(0).offset_direction, Direction::Down);
}

TEST(HandleFault, LegacyIgnoringInferenceCarvesBottomUp) {
  auto p = Policy::legacy(1);
  p.legacy_ignores_inference = true;
  auto sim = single_vma(p, 0x90000, 0xA0000);
  auto a = sim.handle_fault({0x9F000, Access::Write, 1});
  auto b = sim.handle_fault({0x9E000, Access::Write, 2});
  EXPECT_EQ(a.at(0).file_offset, 0x0u);
  EXPECT_EQ(b.at(0).file_offset, 0x1000u);
  EXPECT_EQ(sim.host().vma_count(), 2u);
}

TEST(HandleFault, Errors) {
  auto sim = single_vma(Policy::fixed(1), 0x90000, 0xA0000);
  try {
    sim.handle_fault({0x80000, Access::Read, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FaultOutsideVma);
  }
  sim.handle_fault({0x91000, Access::Read, 2});
  try {
    sim.handle_fault({0x91000, Access::Read, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlreadyMapped);
  }

  auto tiny = single_vma(Policy::fixed(4), 0x90000, 0xA0000, Direction::Down, 0x2000);
  try {
    tiny.handle_fault({0x9F000, Access::Write, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StoreExhausted);
  }
  EXPECT_EQ(tiny.host().vma_count(), 0u);
}

TEST(HandleFault, ChunkExtendsClampsAndTruncates) {
  auto sim = single_vma(Policy::fixed(4), 0x90000, 0xA0000);
  // No last fault: extends in the alloc direction (Down), from the top page.
  auto a = sim.handle_fault({0x9F000, Access::Write, 1});
  EXPECT_EQ(a.at(0).vrange, (VirtualRange{0x9C000, 0xA0000}));
  // Clamped at the VMA's low end.
  auto b = sim.handle_fault({0x91000, Access::Write, 2});
  EXPECT_EQ(b.at(0).vrange, (VirtualRange{0x90000, 0x92000}));
  // Inferred Up, truncated at the first mapped page.
  auto c = sim.handle_fault({0x9A000, Access::Write, 3});
  EXPECT_EQ(c.at(0).vrange, (VirtualRange{0x9A000, 0x9C000}));
  EXPECT_EQ(sim.host().mapped_bytes(), sim.store().allocated_bytes());
}

TEST(HandleFault, LastFaultRecordedAndMergePolicy) {
  SimConfig c = small_config();
  for (bool preserve : {false, true}) {
    Policy p = preserve ? Policy::fixed(1) : Policy::legacy(1);
    Simulator sim(c, p);
    auto r1 = sim.mmap({0x4000, Direction::Down, Prot::rw()});
    sim.handle_fault({r1.start, Access::Write, 1});
    ASSERT_TRUE(sim.address_space().find(r1.start)->last_fault);
    auto r2 = sim.mmap({0x4000, Direction::Down, Prot::rw()});
    ASSERT_EQ(r2.end, r1.start);
    const auto* merged = sim.address_space().find(r1.start);
    ASSERT_EQ(merged->range, (VirtualRange{r2.start, r1.end}));
    EXPECT_EQ(merged->last_fault.has_value(), preserve);
  }
}

TEST(RunTrace, EmptyTrace) {
  SimConfig c = small_config();
  Trace t;
  t.header = {c.page_size, c.layout.lo, c.layout.hi, {}};
  auto r = run_trace(c, Policy::fixed(), t);
  EXPECT_EQ(r.fault_count, 0u);
  EXPECT_EQ(r.final_host_vmas, 0u);
  EXPECT_TRUE(r.series.empty());
  EXPECT_FALSE(r.halted());
}

TEST(RunTrace, HeaderMustMatchConfig) {
  SimConfig c = small_config();
  Trace t;
  t.header = {c.page_size, c.layout.lo, c.layout.hi + kPage, {}};
  try {
    run_trace(c, Policy::fixed(), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedTrace);
  }
}

TEST(RunTrace, PreconditionFailureIsMalformedTrace) {
  SimConfig c = small_config();
  Trace t;
  t.header = {c.page_size, c.layout.lo, c.layout.hi, {}};
  t.events.push_back({1, FaultOp{0x20000, Access::Write}});
  EXPECT_THROW(run_trace(c, Policy::fixed(), t), Error);
}

TEST(RunTrace, BreachHaltsWithOneRecord) {
  ListAppendParams p;
  p.n_rows = 200;
  auto trace = gen_list_append(p);
  auto c = SimConfig::for_trace(trace.header);
  c.max_map_count = 50;
  auto r = run_trace(c, Policy::legacy(1), trace);
  ASSERT_EQ(r.breaches.size(), 1u);
  EXPECT_EQ(r.breaches[0].count, 50u);
  EXPECT_EQ(r.breaches[0].limit, 50u);
  EXPECT_TRUE(r.halted());
  EXPECT_LT(r.series.size(), trace.events.size());
  EXPECT_EQ(r.final_host_vmas, 50u);
  EXPECT_GE(r.peak_host_vmas, r.final_host_vmas);

  auto f = run_trace(c, Policy::fixed(1), trace);
  EXPECT_FALSE(f.halted());
  EXPECT_EQ(f.series.size(), trace.events.size());
}

TEST(RunTrace, ListAppendLegacyVsFixed) {
  ListAppendParams p;
  p.n_rows = 500;
  auto trace = gen_list_append(p);
  auto c = SimConfig::for_trace(trace.header);
  auto legacy = run_trace(c, Policy::legacy(1), trace);
  auto fixed = run_trace(c, Policy::fixed(1), trace);
  EXPECT_GE(legacy.final_host_vmas, 100 * fixed.final_host_vmas);
  EXPECT_EQ(legacy.sentry_vmas, fixed.sentry_vmas);
}

// Replays a random trace, checking the incremental count against the oracle
// and mapped/allocated byte conservation after every event.
void replay_checked(const Trace& t, const Policy& policy) {
  auto c = SimConfig::for_trace(t.header);
  Simulator sim(c, policy);
  for (const auto& ev : t.events) {
    sim.apply(ev);
    ASSERT_EQ(sim.host().vma_count(), oracle_of(sim)) << "seq " << ev.seq;
    ASSERT_EQ(sim.host().mapped_bytes(), sim.store().allocated_bytes()) << "seq " << ev.seq;
    Addr prev_end = 0;
    for (const auto& [s, v] : sim.address_space().vmas()) {
      ASSERT_GE(s, prev_end);
      prev_end = v.range.end;
      if (v.last_fault) ASSERT_TRUE(v.range.contains(v.last_fault->addr));
    }
  }
}

TEST(FaultEngineProperty, OracleAndConservationOnRandomTraces) {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    RandomTraceParams rp;
    rp.seed = seed;
    rp.n_events = 80;
    auto t = gen_random_trace(rp);
    for (std::uint32_t chunk : {1u, 3u}) {
      replay_checked(t, Policy::legacy(chunk));
      replay_checked(t, Policy::fixed(chunk));
      if (HasFatalFailure()) return;
    }
  }
}

using SentryShape = std::vector<std::tuple<Addr, Addr, std::uint8_t, std::uint32_t, Direction>>;

SentryShape sentry_shape(const Simulator& sim) {
  SentryShape out;
  for (const auto& [s, v] : sim.address_space().vmas()) {
    out.emplace_back(v.range.start, v.range.end, v.prot.bits, v.file_id.value, v.alloc_direction);
  }
  return out;
}

std::set<Addr> mapped_pages(const Simulator& sim) {
  std::set<Addr> out;
  for (const auto& p : sim.host().expand_pages()) out.insert(p.page);
  return out;
}

TEST(FaultEngineProperty, PoliciesDivergeOnlyInOffsets) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    RandomTraceParams rp;
    rp.seed = seed;
    auto t = gen_random_trace(rp);
    auto c = SimConfig::for_trace(t.header);
    Simulator legacy(c, Policy::legacy(1));
    Simulator fixed(c, Policy::fixed(1));
    for (const auto& ev : t.events) {
      legacy.apply(ev);
      fixed.apply(ev);
      ASSERT_EQ(sentry_shape(legacy), sentry_shape(fixed)) << "seed " << seed << " seq " << ev.seq;
      ASSERT_EQ(mapped_pages(legacy), mapped_pages(fixed)) << "seed " << seed << " seq " << ev.seq;
    }
  }
}

TEST(FaultEngineProperty, FixedMonotoneFaultsInAllocDirectionCoalesce) {
  std::mt19937_64 rng(41);
  for (int iter = 0; iter < 200; ++iter) {
    const Direction dir = rng() % 2 ? Direction::Up : Direction::Down;
    const std::uint64_t pages = 4 + rng() % 60;
    const Addr lo = 0x100000, hi = lo + pages * kPage;
    auto sim = single_vma(Policy::fixed(1), lo, hi, dir);
    const std::uint64_t n = 1 + rng() % pages;
    std::uint64_t seq = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const Addr a = dir == Direction::Down ? hi - (i + 1) * kPage : lo + i * kPage;
      sim.handle_fault({a, Access::Write, ++seq});
    }
    ASSERT_EQ(sim.host().vma_count(), 1u);
    ASSERT_EQ(oracle_of(sim), 1u);
  }
}

TEST(FaultEngineProperty, FixedFaultsAgainstAllocDirectionGiveTwo) {
  auto sim = single_vma(Policy::fixed(1), 0x100000, 0x140000, Direction::Down);
  for (std::uint64_t i = 0; i < 20; ++i) sim.handle_fault({0x100000 + i * kPage, Access::Write, i + 1});
  EXPECT_EQ(sim.host().vma_count(), 2u);
}

TEST(FaultEngineProperty, LegacyDescendingMatchesOracle) {
  std::mt19937_64 rng(43);
  for (int iter = 0; iter < 100; ++iter) {
    for (bool ignore : {false, true}) {
      auto p = Policy::legacy(1);
      p.legacy_ignores_inference = ignore;
      const std::uint64_t pages = 2 + rng() % 80;
      const Addr lo = 0x100000, hi = lo + pages * kPage;
      auto sim = single_vma(p, lo, hi, Direction::Down);
      for (std::uint64_t i = 0; i < pages; ++i) {
        sim.handle_fault({hi - (i + 1) * kPage, Access::Write, i + 1});
        ASSERT_EQ(sim.host().vma_count(), oracle_of(sim));
        // Offsets carved ascending while addresses descend: one VMA per fault.
        if (ignore) ASSERT_EQ(sim.host().vma_count(), i + 1);
      }
    }
  }
}

TEST(FaultEngineProperty, Determinism) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    RandomTraceParams rp;
    rp.seed = seed;
    auto t = gen_random_trace(rp);
    auto c = SimConfig::for_trace(t.header);
    c.snapshot_interval = 7;
    EXPECT_EQ(run_trace(c, Policy::legacy(), t), run_trace(c, Policy::legacy(), t));
    EXPECT_EQ(run_trace(c, Policy::fixed(), t), run_trace(c, Policy::fixed(), t));
  }
}

TEST(FaultEngineProperty, ReportShape) {
  RandomTraceParams rp;
  rp.seed = 99;
  rp.n_events = 300;
  auto t = gen_random_trace(rp);
  auto c = SimConfig::for_trace(t.header);
  c.snapshot_interval = 50;
  auto r = run_trace(c, Policy::fixed(), t);
  ASSERT_EQ(r.series.size(), t.events.size());
  std::size_t peak = 0;
  for (const auto& s : r.series) peak = std::max(peak, s.host_vmas);
  EXPECT_EQ(r.peak_host_vmas, peak);
  EXPECT_GE(r.peak_host_vmas, r.final_host_vmas);
  EXPECT_EQ(r.snapshots.size(), 6u);
  EXPECT_EQ(r.snapshots.back().seq, t.events.back().seq);
}

TEST(Policy, Names) {
  EXPECT_EQ(Policy::legacy().name(), "legacy");
  EXPECT_EQ(Policy::fixed().name(), "fixed");
  EXPECT_EQ(Policy::fixed().fault_chunk_pages, 16u);
  EXPECT_THROW(Simulator(small_config(), Policy::fixed(0)), Error);
}

}  // namespace
}  // namespace vmsim
