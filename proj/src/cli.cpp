#include "vmsim/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include "vmsim/elf_loader.hpp"
#include "vmsim/fault_engine.hpp"
#include "vmsim/report.hpp"
#include "vmsim/workload.hpp"

namespace vmsim::cli {
namespace {

struct GlobalOptions {
  std::uint64_t page_size = kDefaultPageSize;
  bool page_size_given = false;
  std::size_t max_map_count = kDefaultMaxMapCount;
  std::uint32_t chunk_pages = 16;
  std::string out_path;
  std::string format = "structured";
};

struct SimulateOptions {
  std::string trace_path;
  std::string policy = "fixed";
  bool legacy_ignores_inference = false;
  bool no_eager_merge = false;
};

struct ElfCheckOptions {
  std::string elf_path;
  std::string mode = "both";
};

struct GenOptions {
  std::string kind = "list-append";
  std::size_t rows = 2000;
  std::size_t row_pages = 1;
  double spine_growth = 2.0;
  std::size_t initial_capacity = 2;
  bool per_row_vmas = false;
  std::string arena_direction = "down";
  std::string lo = hex(AddressSpaceLayout{}.lo);
  std::string hi = hex(AddressSpaceLayout{}.hi);
  std::uint64_t seed = 1;
  std::size_t events = 64;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t parse_address(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != s.size()) throw InputError("bad address '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InputError("bad address '" + s + "'");
  }
}

// Writes the report to --out when given, else to `out`.
template <typename Fn>
void emit(const GlobalOptions& g, std::ostream& out, Fn&& write) {
  if (g.out_path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(g.out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write '" + g.out_path + "'");
  write(f);
}

ReportFormat report_format(const GlobalOptions& g) {
  return g.format == "csv" ? ReportFormat::Csv : ReportFormat::Structured;
}

Trace load_trace(const GlobalOptions& g, const std::string& path) {
  const std::string text = read_file(path);
  std::optional<std::uint64_t> expected;
  if (g.page_size_given) expected = g.page_size;
  return parse_trace(text, expected);
}

SimConfig sim_config(const GlobalOptions& g, const Trace& trace) {
  SimConfig c = SimConfig::for_trace(trace.header);
  c.max_map_count = g.max_map_count;
  return c;
}

Policy make_policy(const std::string& name, const GlobalOptions& g, const SimulateOptions& s) {
  Policy p = name == "legacy" ? Policy::legacy(g.chunk_pages) : Policy::fixed(g.chunk_pages);
  p.legacy_ignores_inference = s.legacy_ignores_inference;
  p.eager_sentry_merge = !s.no_eager_merge;
  return p;
}

MetaFields base_meta(std::string_view command, const GlobalOptions& g, const SimConfig& c,
                     const SimulateOptions& s, const Trace& trace) {
  return {
      {"command", std::string(command)},
      {"trace", s.trace_path},
      {"page_size", std::to_string(c.page_size)},
      {"lo", hex(c.layout.lo)},
      {"hi", hex(c.layout.hi)},
      {"max_map_count", std::to_string(c.max_map_count)},
      {"chunk_pages", std::to_string(g.chunk_pages)},
      {"eager_sentry_merge", s.no_eager_merge ? "0" : "1"},
      {"legacy_ignores_inference", s.legacy_ignores_inference ? "1" : "0"},
      {"events", std::to_string(trace.events.size())},
  };
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& s, std::ostream& out) {
  const Trace trace = load_trace(g, s.trace_path);
  const SimConfig config = sim_config(g, trace);
  const Policy policy = make_policy(s.policy, g, s);
  const SimulationReport report = run_trace(config, policy, trace);

  MetaFields meta = base_meta("simulate", g, config, s, trace);
  meta.insert(meta.begin() + 1, {"policy", s.policy});
  emit(g, out, [&](std::ostream& o) { write_simulation_report(o, meta, report, report_format(g)); });
  return report.halted() ? kLimitBreach : kOk;
}

int cmd_compare(const GlobalOptions& g, const SimulateOptions& s, std::ostream& out) {
  const Trace trace = load_trace(g, s.trace_path);
  const SimConfig config = sim_config(g, trace);
  // Each run owns its simulator, so the two policies can replay side by side.
  auto legacy = std::async(std::launch::async,
                           [&] { return run_trace(config, make_policy("legacy", g, s), trace); });
  Comparison cmp;
  cmp.fixed = run_trace(config, make_policy("fixed", g, s), trace);
  cmp.legacy = legacy.get();

  const MetaFields meta = base_meta("compare", g, config, s, trace);
  emit(g, out, [&](std::ostream& o) { write_comparison_report(o, meta, cmp, report_format(g)); });
  return kOk;
}

std::string flags_string(std::uint32_t f) {
  std::string s;
  s += (f & elf::kPfR) ? 'R' : ' ';
  s += (f & elf::kPfW) ? 'W' : ' ';
  s += (f & elf::kPfX) ? 'E' : ' ';
  return s;
}

std::string padded_hex(std::uint64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%0*llx", width, static_cast<unsigned long long>(v));
  return buf;
}

int cmd_elf_check(const GlobalOptions& g, const ElfCheckOptions& e, std::ostream& out) {
  const std::string raw = read_file(e.elf_path);
  const auto* data = reinterpret_cast<const std::byte*>(raw.data());
  const std::span<const std::byte> file(data, raw.size());
  const auto segments = elf::parse_program_headers(file);

  std::vector<elf::ZeroingMode> modes;
  if (e.mode == "linux" || e.mode == "both") modes.push_back(elf::ZeroingMode::LinuxSemantics);
  if (e.mode == "legacy" || e.mode == "both") modes.push_back(elf::ZeroingMode::LegacyAligned);

  std::ostringstream report;
  report << "Type           Offset             VirtAddr           FileSiz            MemSiz             Flg Align\n";
  for (const auto& s : segments) {
    std::string type(elf::segment_type_name(s.raw_type));
    if (s.kind() == elf::SegmentKind::Other && type == "OTHER") type = padded_hex(s.raw_type, 8);
    type.resize(std::max<std::size_t>(type.size(), 14), ' ');
    report << type << ' ' << padded_hex(s.file_offset, 16) << ' ' << padded_hex(s.vaddr, 16) << ' '
           << padded_hex(s.file_siz, 16) << ' ' << padded_hex(s.mem_siz, 16) << ' ' << flags_string(s.flags)
           << ' ' << hex(s.align) << '\n';
  }

  const bool has_dynamic = std::any_of(segments.begin(), segments.end(),
                                       [](const auto& s) { return s.kind() == elf::SegmentKind::Dynamic; });
  int code = kOk;
  if (!has_dynamic) {
    report << "dynamic_placement=none\n";
  } else {
    report << "dynamic_placement=" << elf::to_string(elf::classify_dynamic(segments, g.page_size)) << '\n';
    for (const auto mode : modes) {
      const auto image = elf::build_image(segments, file, mode, g.page_size);
      const auto verdict = elf::check_dynamic_integrity(segments, image, file);
      report << elf::to_string(mode) << '=';
      if (verdict.intact) {
        report << "Intact\n";
      } else {
        report << "Corrupted first_diff=" << hex(*verdict.first_diff) << '\n';
        code = kCorruption;
      }
    }
  }
  emit(g, out, [&](std::ostream& o) { o << report.str(); });
  return code;
}

int cmd_gen_workload(const GlobalOptions& g, const GenOptions& o, std::ostream& out) {
  AddressSpaceLayout layout;
  layout.lo = parse_address(o.lo);
  layout.hi = parse_address(o.hi);
  layout.default_direction = o.arena_direction == "up" ? Direction::Up : Direction::Down;

  Trace trace;
  if (o.kind == "random") {
    RandomTraceParams p;
    p.seed = o.seed;
    p.n_events = o.events;
    p.page_size = g.page_size;
    p.layout = layout;
    trace = gen_random_trace(p);
  } else {
    ListAppendParams p;
    p.n_rows = o.rows;
    p.row_pages = o.row_pages;
    p.spine_growth = o.spine_growth;
    p.initial_capacity = o.initial_capacity;
    p.per_row_vmas = o.per_row_vmas;
    p.page_size = g.page_size;
    p.layout = layout;
    trace = gen_list_append(p);
  }
  const std::string text = serialize_trace(trace);
  emit(g, out, [&](std::ostream& s) { s << text; });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sandbox memory-subsystem simulator: VMA coalescing policies and ELF loader semantics", "vmsim"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  auto* page_opt = app.add_option("--page-size", g.page_size, "Page size in bytes (power of two)");
  app.add_option("--max-map-count", g.max_map_count, "Host VMA limit")->capture_default_str();
  app.add_option("--chunk-pages", g.chunk_pages, "Pages mapped per fault")
      ->check(CLI::Range(1u, 1u << 20))
      ->capture_default_str();
  app.add_option("--out", g.out_path, "Write the report here instead of stdout");
  app.add_option("--format", g.format, "Report format")
      ->check(CLI::IsMember({"structured", "csv"}))
      ->capture_default_str();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Replay a trace under one policy");
  simulate->add_option("trace", sim.trace_path, "Trace file")->required();
  simulate->add_option("--policy", sim.policy)->check(CLI::IsMember({"legacy", "fixed"}))->capture_default_str();
  simulate->add_flag("--legacy-ignores-inference", sim.legacy_ignores_inference,
                     "Legacy carves offsets bottom-up even when a direction was inferred");
  simulate->add_flag("--no-eager-merge", sim.no_eager_merge, "Never merge sentry VMAs");

  SimulateOptions cmp;
  auto* compare = app.add_subcommand("compare", "Replay a trace under both policies");
  compare->add_option("trace", cmp.trace_path, "Trace file")->required();
  compare->add_flag("--legacy-ignores-inference", cmp.legacy_ignores_inference);
  compare->add_flag("--no-eager-merge", cmp.no_eager_merge);

  ElfCheckOptions ec;
  auto* elf_check = app.add_subcommand("elf-check", "Load an ELF file under both zeroing semantics");
  elf_check->add_option("elf", ec.elf_path, "ELF file")->required();
  elf_check->add_option("--mode", ec.mode)->check(CLI::IsMember({"linux", "legacy", "both"}))->capture_default_str();

  GenOptions gen;
  auto* gen_workload = app.add_subcommand("gen-workload", "Emit a synthetic trace");
  gen_workload->add_option("--kind", gen.kind)->check(CLI::IsMember({"list-append", "random"}))->capture_default_str();
  gen_workload->add_option("--rows", gen.rows)->capture_default_str();
  gen_workload->add_option("--row-pages", gen.row_pages)->capture_default_str();
  gen_workload->add_option("--spine-growth", gen.spine_growth)->capture_default_str();
  gen_workload->add_option("--initial-capacity", gen.initial_capacity)->capture_default_str();
  gen_workload->add_flag("--per-row-vmas", gen.per_row_vmas);
  gen_workload->add_option("--arena-direction", gen.arena_direction)
      ->check(CLI::IsMember({"up", "down"}))
      ->capture_default_str();
  gen_workload->add_option("--lo", gen.lo)->capture_default_str();
  gen_workload->add_option("--hi", gen.hi)->capture_default_str();
  gen_workload->add_option("--seed", gen.seed)->capture_default_str();
  gen_workload->add_option("--events", gen.events)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "vmsim: " << e.what() << '\n';
    return kInputError;
  }
  g.page_size_given = page_opt->count() > 0;

  try {
    if (!is_power_of_two(g.page_size)) throw InputError("page size must be a power of two");
    if (g.max_map_count == 0) throw InputError("--max-map-count must be positive");
    if (*simulate) return cmd_simulate(g, sim, out);
    if (*compare) return cmd_compare(g, cmp, out);
    if (*elf_check) return cmd_elf_check(g, ec, out);
    return cmd_gen_workload(g, gen, out);
  } catch (const Error& e) {
    err << "vmsim: " << e.what() << '\n';
  } catch (const InputError& e) {
    err << "vmsim: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace vmsim::cli
