#include "vmsim/fault_engine.hpp"

#include <algorithm>

namespace vmsim {

Policy Policy::legacy(std::uint32_t chunk_pages) {
  Policy p;
  p.offset_direction_default = OffsetDirectionDefault::AlwaysUp;
  p.preserve_last_fault_on_merge = false;
  p.fault_chunk_pages = chunk_pages;
  return p;
}

Policy Policy::fixed(std::uint32_t chunk_pages) {
  Policy p;
  p.offset_direction_default = OffsetDirectionDefault::MatchAllocDirection;
  p.preserve_last_fault_on_merge = true;
  p.fault_chunk_pages = chunk_pages;
  return p;
}

std::string_view Policy::name() const {
  if (offset_direction_default == OffsetDirectionDefault::AlwaysUp && !preserve_last_fault_on_merge) {
    return "legacy";
  }
  if (offset_direction_default == OffsetDirectionDefault::MatchAllocDirection &&
      preserve_last_fault_on_merge) {
    return "fixed";
  }
  return "custom";
}

SimConfig SimConfig::for_trace(const TraceHeader& header) {
  SimConfig c;
  c.page_size = header.page_size;
  c.layout.lo = header.lo;
  c.layout.hi = header.hi;
  return c;
}

Simulator::Simulator(const SimConfig& config, const Policy& policy)
    : config_(config),
      policy_(policy),
      space_(config.layout, config.page_size),
      store_(config.store_capacity, config.file_id, config.page_size),
      host_(HostMmConfig{config.max_map_count}, config.page_size) {
  if (policy_.fault_chunk_pages < 1) throw Error(ErrorCode::InvalidArgument, "fault_chunk_pages < 1");
}

Direction Simulator::offset_direction(const SentryVma& vma, std::optional<Direction> inferred) const {
  const bool always_up = policy_.offset_direction_default == OffsetDirectionDefault::AlwaysUp;
  if (inferred) return always_up && policy_.legacy_ignores_inference ? Direction::Up : *inferred;
  return always_up ? Direction::Up : vma.alloc_direction;
}

VirtualRange Simulator::fault_chunk(const SentryVma& vma, Addr page, Direction extend) const {
  const std::uint64_t ps = config_.page_size;
  VirtualRange chunk{page, page + ps};
  for (std::uint32_t i = 1; i < policy_.fault_chunk_pages; ++i) {
    if (extend == Direction::Up) {
      const Addr next = chunk.end;
      if (next >= vma.range.end || host_.find(next)) break;
      chunk.end += ps;
    } else {
      if (chunk.start <= vma.range.start) break;
      const Addr next = chunk.start - ps;
      if (host_.find(next)) break;
      chunk.start = next;
    }
  }
  return chunk;
}

std::vector<HostMapAction> Simulator::handle_fault(const FaultEvent& event) {
  const std::uint64_t ps = config_.page_size;
  const Addr page = page_floor(event.addr, ps);
  SentryVma* vma = space_.find(event.addr);
  if (!vma) throw Error(ErrorCode::FaultOutsideVma, hex(event.addr));
  if (host_.find(page)) throw Error(ErrorCode::AlreadyMapped, hex(page));

  const std::optional<Direction> inferred = infer_fault_direction(*vma, event.addr);
  const VirtualRange chunk = fault_chunk(*vma, page, inferred.value_or(vma->alloc_direction));
  const Direction carve = offset_direction(*vma, inferred);

  const FileRange offsets = store_.alloc_offsets(chunk.length(), carve);
  std::size_t count = 0;
  try {
    count = host_.host_mmap(chunk, config_.file_id, offsets.offset, vma->prot);
  } catch (...) {
    store_.free_offsets(offsets);
    throw;
  }

  vma->last_fault = LastFault{event.addr, event.seq, inferred};
  faulted_pages_.insert(page);
  if (policy_.eager_sentry_merge) space_.merge_neighbors(event.addr, policy_.preserve_last_fault_on_merge);
  return {HostMapAction{chunk, offsets.offset, carve, count}};
}

VirtualRange Simulator::mmap(const MmapOp& op) {
  const VirtualRange r = space_.allocate_range(op.size, op.direction);
  space_.insert_vma(SentryVma{r, op.prot, config_.file_id, op.direction, std::nullopt});
  if (policy_.eager_sentry_merge) space_.merge_neighbors(r.start, policy_.preserve_last_fault_on_merge);
  return r;
}

void Simulator::munmap(const VirtualRange& range) {
  space_.unmap_range(range);
  const MunmapOutcome out = host_.host_munmap(range);
  for (const HostVma& piece : out.removed) {
    store_.free_offsets(FileRange{piece.file_offset, piece.vrange.length()});
  }
  faulted_pages_.erase(faulted_pages_.lower_bound(range.start), faulted_pages_.lower_bound(range.end));
}

bool Simulator::apply(const TraceEvent& event) {
  if (const auto* m = std::get_if<MmapOp>(&event.op)) {
    mmap(*m);
  } else if (const auto* u = std::get_if<MunmapOp>(&event.op)) {
    munmap(u->range);
  } else {
    const auto& f = std::get<FaultOp>(event.op);
    const Addr page = page_floor(f.addr, config_.page_size);
    if (host_.find(page) && !faulted_pages_.count(page)) return false;
    handle_fault(FaultEvent{f.addr, f.access, event.seq});
  }
  return true;
}

SimulationReport run_trace(const SimConfig& config, const Policy& policy, const Trace& trace) {
  if (trace.header.page_size != config.page_size || trace.header.lo != config.layout.lo ||
      trace.header.hi != config.layout.hi) {
    throw Error(ErrorCode::MalformedTrace, "trace header does not match the simulation config");
  }
  Simulator sim(config, policy);
  SimulationReport report;
  report.series.reserve(trace.events.size());

  auto snapshot = [&](std::uint64_t seq) {
    report.snapshots.push_back({seq, sim.store().fragmentation_stats()});
  };

  for (const TraceEvent& ev : trace.events) {
    try {
      const bool handled = sim.apply(ev);
      if (std::holds_alternative<FaultOp>(ev.op)) {
        handled ? ++report.fault_count : ++report.covered_faults;
      }
    } catch (const MapCountExceeded& e) {
      report.breaches.push_back({ev.seq, e.count(), e.limit()});
      break;
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedTrace, "seq " + std::to_string(ev.seq) + ": " + e.what());
    }
    StepSample s{ev.seq, sim.host().vma_count(), sim.address_space().vma_count(),
                 sim.store().allocated_bytes()};
    report.peak_host_vmas = std::max(report.peak_host_vmas, s.host_vmas);
    report.series.push_back(s);
    if (config.snapshot_interval > 0 && report.series.size() % config.snapshot_interval == 0) {
      snapshot(ev.seq);
    }
  }

  const std::uint64_t last_seq = report.series.empty() ? 0 : report.series.back().seq;
  if (report.snapshots.empty() || report.snapshots.back().seq != last_seq) snapshot(last_seq);
  report.final_host_vmas = sim.host().vma_count();
  report.sentry_vmas = sim.address_space().vma_count();
  return report;
}

}  // namespace vmsim
