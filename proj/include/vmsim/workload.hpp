#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vmsim/address_space.hpp"
#include "vmsim/common.hpp"

namespace vmsim {

enum class Access : std::uint8_t { Read, Write };

struct MmapOp {
  std::uint64_t size = 0;
  Direction direction = Direction::Down;
  Prot prot = Prot::rw();
  friend bool operator==(const MmapOp&, const MmapOp&) = default;
};

struct MunmapOp {
  VirtualRange range;
  friend bool operator==(const MunmapOp&, const MunmapOp&) = default;
};

struct FaultOp {
  Addr addr = 0;
  Access access = Access::Write;
  friend bool operator==(const FaultOp&, const FaultOp&) = default;
};

struct TraceEvent {
  std::uint64_t seq = 0;
  std::variant<MmapOp, MunmapOp, FaultOp> op;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceHeader {
  std::uint64_t page_size = kDefaultPageSize;
  Addr lo = AddressSpaceLayout{}.lo;
  Addr hi = AddressSpaceLayout{}.hi;
  // Generator provenance, serialized as "# meta key=value" lines.
  std::vector<std::pair<std::string, std::string>> metadata;
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;
  friend bool operator==(const Trace&, const Trace&) = default;
};

// Line grammar:
//   H page_size=<int> lo=<hex> hi=<hex>
//   M seq=<int> size=<hex> dir=<up|down> prot=<rwx-subset|->
//   U seq=<int> start=<hex> end=<hex>
//   F seq=<int> addr=<hex> access=<r|w>
// '#' starts a comment line. Throws MalformedLine (with the 1-based line
// number in the message), HeaderMismatch, or NonMonotonicSeq.
Trace parse_trace(std::string_view text, std::optional<std::uint64_t> expected_page_size = {});
std::string serialize_trace(const Trace& trace);

struct ListAppendParams {
  std::size_t n_rows = 2000;
  std::size_t row_pages = 1;
  double spine_growth = 2.0;
  std::size_t initial_capacity = 2;
  std::size_t entry_bytes = 8;
  // One isolated VMA per row instead of rows folding into one arena VMA.
  bool per_row_vmas = false;
  std::uint64_t page_size = kDefaultPageSize;
  AddressSpaceLayout layout;
};

// Synthetic "append a new row list to an outer list" workload. Rows are
// mapped and faulted in the arena's growth direction; the outer list (spine)
// lives at the opposite end of the layout and is reallocated by
// unmap + remap + re-fault whenever it outgrows its capacity.
Trace gen_list_append(const ListAppendParams& params);

struct RandomTraceParams {
  std::uint64_t seed = 1;
  std::size_t n_events = 64;
  std::uint64_t page_size = kDefaultPageSize;
  AddressSpaceLayout layout{0x10000, 0x10000 + 128 * kDefaultPageSize, Direction::Down};
  std::size_t max_mmap_pages = 8;
};

// Random mmap / fault / munmap mix satisfying replay preconditions: faults
// only hit pages of live mappings that have not been faulted since they were
// last mapped. Deterministic for a fixed seed.
Trace gen_random_trace(const RandomTraceParams& params);

}  // namespace vmsim
