// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "vmsim/backing_store.hpp"
#include "vmsim/cli.hpp"
#include "vmsim/elf_fixture.hpp"
#include "vmsim/elf_loader.hpp"
#include "vmsim/fault_engine.hpp"
#include "vmsim/workload.hpp"

namespace {

using namespace vmsim;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kPage = 0x1000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("vmsim_acceptance_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::byte> slurp_bytes(const std::string& path) {
  const std::string s = slurp(path);
  std::vector<std::byte> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = static_cast<std::byte>(s[i]);
  return out;
}

std::size_t oracle_of(const Simulator& sim) {
  const auto pages = sim.host().expand_pages();
  return oracle_vma_count(pages, sim.config().page_size);
}

Outcome ac1_fragmentation() {
  const auto t0 = Clock::now();
  ListAppendParams p;
  p.n_rows = 2000;
  p.row_pages = 1;
  const Trace trace = gen_list_append(p);
  const SimConfig config = SimConfig::for_trace(trace.header);

  Simulator legacy(config, Policy::legacy(1));
  Simulator fixed(config, Policy::fixed(1));
  for (const auto& e : trace.events) {
    legacy.apply(e);
    fixed.apply(e);
  }
  const double elapsed = seconds_since(t0);
  const std::size_t lf = legacy.host().vma_count();
  const std::size_t ff = fixed.host().vma_count();
  if (lf != oracle_of(legacy) || ff != oracle_of(fixed)) return fail("oracle disagrees with host tree");

  // The arena is the one top-down sentry VMA; count host VMAs inside it.
  std::size_t arena_vmas = 0, arena_host = 0;
  for (const auto& [s, v] : fixed.address_space().vmas()) {
    if (v.alloc_direction != Direction::Down) continue;
    ++arena_vmas;
    for (const auto& [hs, hv] : fixed.host().vmas()) arena_host += hv.vrange.overlaps(v.range) ? 1 : 0;
  }
  const double ratio = static_cast<double>(lf) / static_cast<double>(ff);
  char buf[200];
  std::snprintf(buf, sizeof buf, "legacy=%zu fixed=%zu ratio=%.2f (bound >=100) arena_host_vmas=%zu time=%.3fs",
                lf, ff, ratio, arena_host, elapsed);
  Outcome o{true, buf};
  o.pass = ratio >= 100.0 && arena_vmas == 1 && arena_host == 1 && elapsed < 5.0;
  return o;
}

Outcome ac2_limit_breach() {
  const auto t0 = Clock::now();
  ListAppendParams p;
  p.n_rows = 66000;
  const std::string path = temp_path("ac2_trace.txt");
  std::ofstream(path, std::ios::binary) << serialize_trace(gen_list_append(p));

  const std::string legacy_out = temp_path("ac2_legacy.txt");
  std::ostringstream sink, err;
  const int legacy_code =
      cli::run({"--chunk-pages", "1", "--out", legacy_out, "simulate", path, "--policy", "legacy"}, sink, err);
  const int fixed_code = cli::run({"--chunk-pages", "1", "--out", temp_path("ac2_fixed.txt"), "simulate", path,
                                   "--policy", "fixed"},
                                  sink, err);
  const double elapsed = seconds_since(t0);
  const std::string report = slurp(legacy_out);
  fs::remove(path);
  fs::remove(legacy_out);
  fs::remove(temp_path("ac2_fixed.txt"));

  std::size_t breach_lines = 0;
  std::istringstream in(report);
  std::string line, breach;
  while (std::getline(in, line)) {
    if (line.rfind("breach=", 0) == 0) {
      ++breach_lines;
      breach = line;
    }
  }
  const bool at_limit = breach.find("count:65530 limit:65530") != std::string::npos;
  char buf[200];
  std::snprintf(buf, sizeof buf, "legacy_exit=%d fixed_exit=%d breaches=%zu [%s] time=%.2fs", legacy_code,
                fixed_code, breach_lines, breach.c_str(), elapsed);
  return {legacy_code == 3 && fixed_code == 0 && breach_lines == 1 && at_limit && elapsed < 30.0, buf};
}

Outcome ac3_oracle_equivalence() {
  std::size_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    RandomTraceParams rp;
    rp.seed = seed;
    rp.n_events = 64 + seed % 64;
    const Trace t = gen_random_trace(rp);
    const SimConfig config = SimConfig::for_trace(t.header);
    const std::uint32_t chunk = seed % 2 ? 1 : 1 + seed % 5;
    for (const Policy& policy : {Policy::legacy(chunk), Policy::fixed(chunk)}) {
      Simulator sim(config, policy);
      for (const auto& e : t.events) {
        sim.apply(e);
        ++checks;
        if (sim.host().vma_count() != oracle_of(sim)) {
          return fail("seed " + std::to_string(seed) + " policy " + std::string(policy.name()) + " seq " +
                      std::to_string(e.seq));
        }
      }
    }
  }
  return {true, "1000 traces, " + std::to_string(checks) + " event checks"};
}

Outcome ac4_monotonicity() {
  std::mt19937_64 rng(4);
  std::size_t runs = 0;
  for (int iter = 0; iter < 500; ++iter) {
    for (Direction d : {Direction::Up, Direction::Down}) {
      BackingStore store(512 * kPage);
      std::optional<std::uint64_t> prev;
      while (true) {
        FileRange r;
        try {
          r = store.alloc_offsets((1 + rng() % 7) * kPage, d);
        } catch (const Error&) {
          break;
        }
        if (prev && (d == Direction::Up ? r.offset <= *prev : r.offset >= *prev)) {
          return fail("backing store " + std::string(to_string(d)) + " iteration " + std::to_string(iter));
        }
        prev = r.offset;
      }

      AddressSpace space({0x10000, 0x10000 + 512 * kPage, Direction::Down}, kPage);
      std::optional<Addr> prev_start;
      while (true) {
        VirtualRange r;
        try {
          r = space.allocate_range((1 + rng() % 7) * kPage, d);
        } catch (const Error&) {
          break;
        }
        space.insert_vma(SentryVma{r, Prot::rw(), FileId{1}, d, std::nullopt});
        if (prev_start && (d == Direction::Up ? r.start <= *prev_start : r.start >= *prev_start)) {
          return fail("address space " + std::string(to_string(d)) + " iteration " + std::to_string(iter));
        }
        prev_start = r.start;
      }
      ++runs;
    }
  }
  return {true, std::to_string(runs) + " randomized sequences per structure"};
}

Outcome ac5_elf_dual_semantics() {
  const std::string dir = VMSIM_FIXTURE_DIR;
  struct Case {
    std::string file;
    bool legacy_intact;
    elf::DynamicPlacement placement;
  };
  const Case cases[] = {{"dynamic_in_extension.elf", false, elf::DynamicPlacement::InAlignedExtension},
                        {"dynamic_inside_load.elf", true, elf::DynamicPlacement::InsideLoad}};
  std::string detail;
  for (const auto& c : cases) {
    const auto file = slurp_bytes(dir + "/" + c.file);
    if (file.empty()) return fail("missing fixture " + c.file);
    const auto segs = elf::parse_program_headers(file);
    if (elf::classify_dynamic(segs) != c.placement) return fail(c.file + ": unexpected placement");
    const auto lin = elf::check_dynamic_integrity(segs, elf::build_image(segs, file, elf::ZeroingMode::LinuxSemantics), file);
    const auto leg = elf::check_dynamic_integrity(segs, elf::build_image(segs, file, elf::ZeroingMode::LegacyAligned), file);
    if (!lin.intact) return fail(c.file + ": linux corrupted");
    if (leg.intact != c.legacy_intact) return fail(c.file + ": legacy verdict");
    detail += c.file + " linux=Intact legacy=" + (leg.intact ? "Intact" : "Corrupted") + "; ";
  }
  return {true, detail};
}

Outcome ac6_zeroing_containment() {
  std::mt19937_64 rng(6);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::uint64_t off = kPage + rng() % (4 * kPage);
    const std::uint64_t vaddr = 0x600000 + kPage * (rng() % 16) + off % kPage;
    const std::uint64_t file_siz = rng() % 0x4000;
    const std::uint64_t mem_siz = file_siz + rng() % 0x4000;
    const std::uint64_t file_len = off + file_siz + rng() % 0x3000;
    elf::FixtureBuilder b;
    b.add_segment({elf::kPtLoad, elf::kPfR | elf::kPfW, off, vaddr, file_siz, mem_siz, kPage});
    std::vector<std::byte> payload(file_len - elf::kEhdrSize - elf::kPhdrSize);
    for (auto& x : payload) x = static_cast<std::byte>(rng());
    b.write(elf::kEhdrSize + elf::kPhdrSize, payload);
    const auto file = b.build();
    const auto segs = elf::parse_program_headers(file);
    const auto lin = elf::build_image(segs, file, elf::ZeroingMode::LinuxSemantics);
    const auto leg = elf::build_image(segs, file, elf::ZeroingMode::LegacyAligned);
    if (lin.base != leg.base || lin.bytes.size() != leg.bytes.size()) return fail("image extents differ");
    for (std::size_t i = 0; i < lin.bytes.size(); ++i) {
      if (lin.origin[i] == elf::ByteOrigin::Zeroed && leg.origin[i] != elf::ByteOrigin::Zeroed) {
        return fail("layout " + std::to_string(iter) + ": linux-zeroed byte not zeroed by legacy");
      }
    }
    for (std::uint64_t i = 0; i < file_siz; ++i) {
      const std::size_t at = vaddr - lin.base + i;
      if (lin.bytes[at] != file[off + i] || leg.bytes[at] != file[off + i]) {
        return fail("layout " + std::to_string(iter) + ": declared byte differs");
      }
    }
  }
  return {true, "1000 layouts"};
}

Outcome ac7_round_trip() {
  const std::string canonical =
      "H page_size=4096 lo=0x1000 hi=0x400000000000\n"
      "# meta generator=hand\n"
      "M seq=1 size=0x4000 dir=down prot=rw\n"
      "F seq=2 addr=0x3ffffffff000 access=w\n"
      "U seq=3 start=0x3fffffffc000 end=0x400000000000\n"
      "M seq=4 size=0x1000 dir=up prot=-\n"
      "F seq=5 addr=0x1000 access=r\n";
  if (serialize_trace(parse_trace(canonical)) != canonical) return fail("canonical text");

  std::mt19937_64 rng(7);
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed, ++n) {
    RandomTraceParams rp;
    rp.seed = seed;
    const Trace t = gen_random_trace(rp);
    const std::string text = serialize_trace(t);
    if (parse_trace(text) != t || serialize_trace(parse_trace(text)) != text) return fail("random seed " + std::to_string(seed));
  }
  for (int i = 0; i < 500; ++i, ++n) {
    ListAppendParams p;
    p.n_rows = 1 + rng() % 50;
    p.row_pages = 1 + rng() % 4;
    p.spine_growth = 1.25 + static_cast<double>(rng() % 100) / 37.0;
    const Trace t = gen_list_append(p);
    const std::string text = serialize_trace(t);
    if (parse_trace(text) != t || serialize_trace(parse_trace(text)) != text) return fail("list-append case " + std::to_string(i));
  }
  return {true, std::to_string(n) + " randomized traces + canonical text"};
}

Outcome ac8_determinism() {
  const std::string trace = temp_path("ac8_trace.txt");
  std::ofstream(trace, std::ios::binary) << serialize_trace(gen_list_append({}));
  std::ostringstream sink, err;
  const std::string a = temp_path("ac8_a.txt"), b = temp_path("ac8_b.txt");
  const int ca = cli::run({"--out", a, "compare", trace}, sink, err);
  const int cb = cli::run({"--out", b, "compare", trace}, sink, err);
  const std::string ra = slurp(a), rb = slurp(b);
  fs::remove(trace);
  fs::remove(a);
  fs::remove(b);
  if (ca != 0 || cb != 0) return fail("compare exit codes " + std::to_string(ca) + "/" + std::to_string(cb));
  if (ra.empty() || ra != rb) return fail("reports differ");
  return {true, std::to_string(ra.size()) + " identical bytes"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"AC1 fragmentation pathology", ac1_fragmentation},
      {"AC2 limit breach", ac2_limit_breach},
      {"AC3 oracle equivalence", ac3_oracle_equivalence},
      {"AC4 direction monotonicity", ac4_monotonicity},
      {"AC5 ELF dual semantics", ac5_elf_dual_semantics},
      {"AC6 zeroing containment", ac6_zeroing_containment},
      {"AC7 trace round-trip", ac7_round_trip},
      {"AC8 report determinism", ac8_determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
