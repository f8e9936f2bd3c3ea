#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "vmsim/address_space.hpp"
#include "vmsim/backing_store.hpp"
#include "vmsim/host_kernel.hpp"
#include "vmsim/workload.hpp"

namespace vmsim {

// Where file offsets go when the faulting VMA carries no last fault.
enum class OffsetDirectionDefault : std::uint8_t {
  AlwaysUp,             // legacy: bottom-up regardless of address growth
  MatchAllocDirection,  // fixed: follow the VMA's allocation direction
};

struct Policy {
  OffsetDirectionDefault offset_direction_default = OffsetDirectionDefault::MatchAllocDirection;
  bool preserve_last_fault_on_merge = true;
  std::uint32_t fault_chunk_pages = 16;
  bool eager_sentry_merge = true;
  // Sensitivity switch: legacy carves offsets bottom-up even when a
  // direction was inferred. Only meaningful with AlwaysUp.
  bool legacy_ignores_inference = false;

  static Policy legacy(std::uint32_t chunk_pages = 16);
  static Policy fixed(std::uint32_t chunk_pages = 16);

  std::string_view name() const;
};

struct SimConfig {
  std::uint64_t page_size = kDefaultPageSize;
  AddressSpaceLayout layout;
  std::size_t max_map_count = kDefaultMaxMapCount;
  std::uint64_t store_capacity = kDefaultStoreCapacity;
  FileId file_id{1};
  // Fragmentation snapshot cadence in applied events; the final state is
  // always captured.
  std::size_t snapshot_interval = 1024;

  // Config whose page size and layout come from a trace header.
  static SimConfig for_trace(const TraceHeader& header);
};

struct FaultEvent {
  Addr addr = 0;
  Access access = Access::Write;
  std::uint64_t seq = 0;
};

struct HostMapAction {
  VirtualRange vrange;
  std::uint64_t file_offset = 0;
  Direction offset_direction = Direction::Up;
  std::size_t host_vma_count = 0;
};

struct StepSample {
  std::uint64_t seq = 0;
  std::size_t host_vmas = 0;
  std::size_t sentry_vmas = 0;
  std::uint64_t allocated_bytes = 0;
  friend bool operator==(const StepSample&, const StepSample&) = default;
};

struct LimitBreach {
  std::uint64_t seq = 0;
  std::size_t count = 0;
  std::size_t limit = 0;
  friend bool operator==(const LimitBreach&, const LimitBreach&) = default;
};

struct FragmentationSnapshot {
  std::uint64_t seq = 0;
  FragmentationStats stats;
  friend bool operator==(const FragmentationSnapshot&, const FragmentationSnapshot&) = default;
};

struct SimulationReport {
  std::vector<StepSample> series;
  std::size_t peak_host_vmas = 0;
  std::size_t final_host_vmas = 0;
  std::size_t sentry_vmas = 0;
  std::size_t fault_count = 0;
  std::size_t covered_faults = 0;
  std::vector<LimitBreach> breaches;
  std::vector<FragmentationSnapshot> snapshots;

  bool halted() const { return !breaches.empty(); }
  friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

// One simulated sandbox: sentry address space, memfd backing store and host
// kernel view, driven by the fault-handling policy.
class Simulator {
 public:
  Simulator(const SimConfig& config, const Policy& policy);

  // Resolves a page fault end to end: direction inference, chunk sizing,
  // directional offset carving, host mapping and last-fault bookkeeping.
  // The faulting page must be unmapped on the host.
  std::vector<HostMapAction> handle_fault(const FaultEvent& event);

  VirtualRange mmap(const MmapOp& op);
  void munmap(const VirtualRange& range);

  // Applies one trace event. A fault on a page mapped by an earlier chunk
  // (and never itself faulted) is a covered access and maps nothing; returns
  // false in that case.
  bool apply(const TraceEvent& event);

  const AddressSpace& address_space() const { return space_; }
  const BackingStore& store() const { return store_; }
  const HostKernel& host() const { return host_; }
  const Policy& policy() const { return policy_; }
  const SimConfig& config() const { return config_; }

 private:
  Direction offset_direction(const SentryVma& vma, std::optional<Direction> inferred) const;
  VirtualRange fault_chunk(const SentryVma& vma, Addr page, Direction extend) const;

  SimConfig config_;
  Policy policy_;
  AddressSpace space_;
  BackingStore store_;
  HostKernel host_;
  std::set<Addr> faulted_pages_;
};

// Replays a trace from a fresh simulator. MapCountExceeded is recorded as a
// breach and halts the replay; any other precondition failure is rethrown as
// MalformedTrace.
SimulationReport run_trace(const SimConfig& config, const Policy& policy, const Trace& trace);

}  // namespace vmsim
