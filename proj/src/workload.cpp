#include "vmsim/workload.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

namespace vmsim {
namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + why);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<std::uint64_t> parse_uint(std::string_view s, int base) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_hex(std::string_view s) {
  if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) return std::nullopt;
  return parse_uint(s.substr(2), 16);
}

std::optional<Prot> parse_prot(std::string_view s) {
  if (s == "-") return Prot{};
  Prot p;
  for (char c : s) {
    std::uint8_t bit = 0;
    if (c == 'r') bit = Prot::kRead;
    else if (c == 'w') bit = Prot::kWrite;
    else if (c == 'x') bit = Prot::kExec;
    else return std::nullopt;
    if (p.bits & bit) return std::nullopt;
    p.bits |= bit;
  }
  if (s.empty()) return std::nullopt;
  return p;
}

// key=value fields of one record; every expected key exactly once.
class Fields {
 public:
  Fields(std::size_t line_no, const std::vector<std::string_view>& tokens,
         std::initializer_list<std::string_view> keys)
      : line_no_(line_no) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto eq = tokens[i].find('=');
      if (eq == std::string_view::npos) malformed(line_no, "expected key=value");
      auto key = tokens[i].substr(0, eq);
      bool known = false;
      for (auto k : keys) known |= k == key;
      if (!known) malformed(line_no, "unknown field '" + std::string(key) + "'");
      if (!values_.emplace(key, tokens[i].substr(eq + 1)).second) {
        malformed(line_no, "duplicate field '" + std::string(key) + "'");
      }
    }
    for (auto k : keys) {
      if (!values_.count(k)) malformed(line_no, "missing field '" + std::string(k) + "'");
    }
  }

  std::string_view raw(std::string_view key) const { return values_.at(key); }

  std::uint64_t dec(std::string_view key) const {
    auto v = parse_uint(raw(key), 10);
    if (!v) malformed(line_no_, "bad integer for '" + std::string(key) + "'");
    return *v;
  }

  std::uint64_t hex(std::string_view key) const {
    auto v = parse_hex(raw(key));
    if (!v) malformed(line_no_, "bad hex for '" + std::string(key) + "'");
    return *v;
  }

 private:
  std::size_t line_no_;
  std::map<std::string_view, std::string_view> values_;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Trace parse_trace(std::string_view text, std::optional<std::uint64_t> expected_page_size) {
  Trace trace;
  bool have_header = false;
  std::optional<std::uint64_t> last_seq;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;

    for (unsigned char c : line) {
      if (c > 0x7E || (c < 0x20 && c != '\t')) malformed(line_no, "non-printable byte");
    }
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kMeta = "# meta ";
      if (line.substr(0, kMeta.size()) == kMeta) {
        auto kv = line.substr(kMeta.size());
        auto eq = kv.find('=');
        if (eq == std::string_view::npos || eq == 0) malformed(line_no, "bad meta record");
        trace.header.metadata.emplace_back(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
      }
      continue;
    }

    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::string_view kind = tokens.front();

    if (!have_header) {
      if (kind != "H") {
        throw Error(ErrorCode::HeaderMismatch, "line " + std::to_string(line_no) + ": expected H record");
      }
      Fields f(line_no, tokens, {"page_size", "lo", "hi"});
      trace.header.page_size = f.dec("page_size");
      trace.header.lo = f.hex("lo");
      trace.header.hi = f.hex("hi");
      const auto ps = trace.header.page_size;
      if (!is_power_of_two(ps) || trace.header.lo >= trace.header.hi ||
          !page_aligned(trace.header.lo, ps) || !page_aligned(trace.header.hi, ps)) {
        throw Error(ErrorCode::HeaderMismatch, "inconsistent header values");
      }
      if (expected_page_size && *expected_page_size != ps) {
        throw Error(ErrorCode::HeaderMismatch, "trace page_size " + std::to_string(ps) +
                                                   " != configured " + std::to_string(*expected_page_size));
      }
      have_header = true;
      continue;
    }

    const auto ps = trace.header.page_size;
    TraceEvent ev;
    if (kind == "M") {
      Fields f(line_no, tokens, {"seq", "size", "dir", "prot"});
      ev.seq = f.dec("seq");
      MmapOp op;
      op.size = f.hex("size");
      if (op.size == 0 || !page_aligned(op.size, ps)) malformed(line_no, "size not a page multiple");
      auto dir = f.raw("dir");
      if (dir == "up") op.direction = Direction::Up;
      else if (dir == "down") op.direction = Direction::Down;
      else malformed(line_no, "bad dir");
      auto prot = parse_prot(f.raw("prot"));
      if (!prot) malformed(line_no, "bad prot");
      op.prot = *prot;
      ev.op = op;
    } else if (kind == "U") {
      Fields f(line_no, tokens, {"seq", "start", "end"});
      ev.seq = f.dec("seq");
      MunmapOp op{{f.hex("start"), f.hex("end")}};
      if (op.range.empty() || !page_aligned(op.range.start, ps) || !page_aligned(op.range.end, ps)) {
        malformed(line_no, "bad unmap range");
      }
      ev.op = op;
    } else if (kind == "F") {
      Fields f(line_no, tokens, {"seq", "addr", "access"});
      ev.seq = f.dec("seq");
      FaultOp op;
      op.addr = f.hex("addr");
      if (!page_aligned(op.addr, ps)) malformed(line_no, "fault address not page-aligned");
      auto access = f.raw("access");
      if (access == "r") op.access = Access::Read;
      else if (access == "w") op.access = Access::Write;
      else malformed(line_no, "bad access");
      ev.op = op;
    } else if (kind == "H") {
      throw Error(ErrorCode::HeaderMismatch, "line " + std::to_string(line_no) + ": second H record");
    } else {
      malformed(line_no, "unknown record kind '" + std::string(kind) + "'");
    }

    if (last_seq && ev.seq <= *last_seq) {
      throw Error(ErrorCode::NonMonotonicSeq, "line " + std::to_string(line_no) + ": seq " +
                                                  std::to_string(ev.seq) + " after " + std::to_string(*last_seq));
    }
    last_seq = ev.seq;
    trace.events.push_back(ev);
  }

  if (!have_header) throw Error(ErrorCode::HeaderMismatch, "missing H record");
  return trace;
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  out += "H page_size=" + std::to_string(trace.header.page_size) + " lo=" + hex(trace.header.lo) +
         " hi=" + hex(trace.header.hi) + "\n";
  for (const auto& [k, v] : trace.header.metadata) out += "# meta " + k + "=" + v + "\n";
  for (const auto& ev : trace.events) {
    const std::string seq = "seq=" + std::to_string(ev.seq);
    if (const auto* m = std::get_if<MmapOp>(&ev.op)) {
      out += "M " + seq + " size=" + hex(m->size) + " dir=" + std::string(to_string(m->direction)) +
             " prot=" + to_string(m->prot) + "\n";
    } else if (const auto* u = std::get_if<MunmapOp>(&ev.op)) {
      out += "U " + seq + " start=" + hex(u->range.start) + " end=" + hex(u->range.end) + "\n";
    } else {
      const auto& f = std::get<FaultOp>(ev.op);
      out += "F " + seq + " addr=" + hex(f.addr) + " access=" + (f.access == Access::Read ? "r" : "w") + "\n";
    }
  }
  return out;
}

Trace gen_list_append(const ListAppendParams& p) {
  if (p.n_rows < 1 || p.row_pages < 1 || !(p.spine_growth > 1.0) || p.initial_capacity < 1 ||
      p.entry_bytes < 1) {
    throw Error(ErrorCode::InvalidArgument, "list-append parameters out of range");
  }
  const std::uint64_t ps = p.page_size;
  AddressSpace space(p.layout, ps);
  const Direction arena_dir = p.layout.default_direction;
  const Direction spine_dir = opposite(arena_dir);

  Trace trace;
  trace.header.page_size = ps;
  trace.header.lo = p.layout.lo;
  trace.header.hi = p.layout.hi;
  trace.header.metadata = {
      {"generator", "list_append"},
      {"n_rows", std::to_string(p.n_rows)},
      {"row_pages", std::to_string(p.row_pages)},
      {"spine_growth", format_double(p.spine_growth)},
      {"initial_capacity", std::to_string(p.initial_capacity)},
      {"entry_bytes", std::to_string(p.entry_bytes)},
      {"per_row_vmas", p.per_row_vmas ? "1" : "0"},
  };

  std::uint64_t seq = 0;
  auto allocate = [&](std::uint64_t bytes, Direction d) {
    try {
      VirtualRange r = space.allocate_range(bytes, d);
      trace.events.push_back({++seq, MmapOp{bytes, d, Prot::rw()}});
      return r;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfAddressSpace) {
        throw Error(ErrorCode::ArenaExhausted, "layout cannot hold the workload");
      }
      throw;
    }
  };
  auto unmap = [&](const VirtualRange& r) {
    space.unmap_range(r);
    trace.events.push_back({++seq, MunmapOp{r}});
  };
  auto fault = [&](Addr a) { trace.events.push_back({++seq, FaultOp{a, Access::Write}}); };
  auto spine_pages_for = [&](std::uint64_t entries) {
    return std::max<std::uint64_t>(1, (entries * p.entry_bytes + ps - 1) / ps);
  };

  std::uint64_t capacity = p.initial_capacity;
  VirtualRange spine = allocate(spine_pages_for(capacity) * ps, spine_dir);
  std::uint64_t spine_faulted = 0;  // pages faulted from spine.start upward
  std::uint64_t length = 0;

  for (std::size_t row = 0; row < p.n_rows; ++row) {
    VirtualRange r;
    if (p.per_row_vmas) {
      r = allocate((p.row_pages + 1) * ps, arena_dir);
      // A one-page hole on the growth side keeps the next row from abutting.
      if (arena_dir == Direction::Down) {
        unmap({r.start, r.start + ps});
        r.start += ps;
      } else {
        unmap({r.end - ps, r.end});
        r.end -= ps;
      }
    } else {
      r = allocate(p.row_pages * ps, arena_dir);
    }
    for (std::size_t i = 0; i < p.row_pages; ++i) {
      fault(arena_dir == Direction::Down ? r.end - (i + 1) * ps : r.start + i * ps);
    }

    if (length == capacity) {
      auto grown = static_cast<std::uint64_t>(std::ceil(static_cast<double>(capacity) * p.spine_growth));
      capacity = std::max(capacity + 1, grown);
      unmap(spine);
      spine = allocate(spine_pages_for(capacity) * ps, spine_dir);
      spine_faulted = (length * p.entry_bytes + ps - 1) / ps;
      for (std::uint64_t i = 0; i < spine_faulted; ++i) fault(spine.start + i * ps);
    }
    const std::uint64_t page_index = length * p.entry_bytes / ps;
    if (page_index >= spine_faulted) {
      for (std::uint64_t i = spine_faulted; i <= page_index; ++i) fault(spine.start + i * ps);
      spine_faulted = page_index + 1;
    }
    ++length;
  }
  return trace;
}

Trace gen_random_trace(const RandomTraceParams& p) {
  const std::uint64_t ps = p.page_size;
  AddressSpace space(p.layout, ps);
  std::mt19937_64 rng(p.seed);
  auto pick = [&](std::uint64_t n) { return rng() % n; };

  Trace trace;
  trace.header.page_size = ps;
  trace.header.lo = p.layout.lo;
  trace.header.hi = p.layout.hi;
  trace.header.metadata = {{"generator", "random"}, {"seed", std::to_string(p.seed)}};

  std::set<Addr> faulted;
  std::optional<Addr> last_fault;
  std::uint64_t seq = 0;

  auto unfaulted_pages = [&] {
    std::vector<Addr> pages;
    for (const auto& [start, vma] : space.vmas()) {
      for (Addr a = vma.range.start; a < vma.range.end; a += ps) {
        if (!faulted.count(a)) pages.push_back(a);
      }
    }
    return pages;
  };

  while (trace.events.size() < p.n_events) {
    const auto roll = pick(100);
    if (roll < 30 || space.vma_count() == 0) {
      const std::uint64_t size = (1 + pick(p.max_mmap_pages)) * ps;
      const Direction d = pick(4) == 0 ? opposite(p.layout.default_direction) : p.layout.default_direction;
      const Prot prot = pick(5) == 0 ? Prot{Prot::kRead} : Prot::rw();
      VirtualRange r;
      try {
        r = space.allocate_range(size, d);
      } catch (const Error&) {
        if (space.vma_count() == 0) break;
        continue;
      }
      space.insert_vma(SentryVma{r, prot, FileId{1}, d, std::nullopt});
      trace.events.push_back({++seq, MmapOp{size, d, prot}});
    } else if (roll < 85) {
      auto pages = unfaulted_pages();
      if (pages.empty()) continue;
      Addr target = pages[pick(pages.size())];
      // Bias toward runs next to the previous fault so coalescing gets exercised.
      if (last_fault && pick(3) != 0) {
        const Addr step = pick(2) == 0 ? ps : 0 - ps;
        const Addr next = *last_fault + step;
        if (space.find(next) && !faulted.count(next)) target = next;
      }
      faulted.insert(target);
      last_fault = target;
      trace.events.push_back({++seq, FaultOp{target, pick(2) ? Access::Write : Access::Read}});
    } else {
      std::vector<const SentryVma*> live;
      for (const auto& [s, v] : space.vmas()) live.push_back(&v);
      const SentryVma& v = *live[pick(live.size())];
      const std::uint64_t pages = v.range.length() / ps;
      std::uint64_t a = pick(pages);
      std::uint64_t b = a + 1 + pick(pages - a);
      Addr start = v.range.start + a * ps;
      Addr end = v.range.start + b * ps;
      // Occasionally overhang into the neighbourhood to cover partial / free-space unmaps.
      if (pick(4) == 0 && start >= p.layout.lo + ps) start -= ps;
      if (pick(4) == 0 && end + ps <= p.layout.hi) end += ps;
      const VirtualRange r{start, end};
      space.unmap_range(r);
      for (auto it = faulted.lower_bound(start); it != faulted.end() && *it < end;) it = faulted.erase(it);
      trace.events.push_back({++seq, MunmapOp{r}});
    }
  }
  return trace;
}

}  // namespace vmsim
