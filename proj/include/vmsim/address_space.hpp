#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vmsim/common.hpp"
#include "vmsim/interval_set.hpp"

namespace vmsim {

// Most recent fault recorded on a sentry VMA. `inferred` is the direction
// that fault itself inferred, reused when a later fault hits the same address.
struct LastFault {
  Addr addr = 0;
  std::uint64_t seq = 0;
  std::optional<Direction> inferred;

  friend bool operator==(const LastFault&, const LastFault&) = default;
};

struct SentryVma {
  VirtualRange range;
  Prot prot;
  FileId file_id;
  Direction alloc_direction = Direction::Down;
  std::optional<LastFault> last_fault;

  friend bool operator==(const SentryVma&, const SentryVma&) = default;
};

struct AddressSpaceLayout {
  Addr lo = 0x1000;
  Addr hi = 0x4000'0000'0000;
  Direction default_direction = Direction::Down;

  friend bool operator==(const AddressSpaceLayout&, const AddressSpaceLayout&) = default;
};

// Attribute equality required for two sentry VMAs to merge.
bool sentry_mergeable(const SentryVma& left, const SentryVma& right);

// Folds two abutting, attribute-equal VMAs into one. With preserve_last_fault
// the merged VMA keeps whichever last_fault has the higher sequence number;
// without it the merged VMA has none (the legacy behaviour).
SentryVma merge_adjacent(const SentryVma& left, const SentryVma& right, bool preserve_last_fault);

// Down if fault_addr is below the last fault, Up if above, nullopt when the
// VMA has no last fault. A repeat at the same address reuses the direction
// inferred by the previous fault.
std::optional<Direction> infer_fault_direction(const SentryVma& vma, Addr fault_addr);

// Guest (sentry-side) address space: directional range allocation over
// [lo, hi) and the ordered set of guest VMAs.
class AddressSpace {
 public:
  using VmaMap = std::map<Addr, SentryVma>;  // keyed by range.start

  explicit AddressSpace(AddressSpaceLayout layout = {}, std::uint64_t page_size = kDefaultPageSize);

  // Reserves `size` bytes flush against the top of the highest free gap
  // (Down) or the bottom of the lowest one (Up).
  VirtualRange allocate_range(std::uint64_t size, Direction direction);
  VirtualRange allocate_range(std::uint64_t size) {
    return allocate_range(size, layout_.default_direction);
  }

  // Inserts without merging; the range is reserved as a side effect.
  void insert_vma(SentryVma vma);

  // Removes every VMA portion and reservation inside `range`. Split fragments
  // keep their attributes; only the fragment holding last_fault keeps it.
  void unmap_range(const VirtualRange& range);

  // Merges the VMA containing `addr` with mergeable neighbours on both sides.
  // Returns the resulting VMA.
  SentryVma& merge_neighbors(Addr addr, bool preserve_last_fault);

  SentryVma* find(Addr addr);
  const SentryVma* find(Addr addr) const;

  std::size_t vma_count() const { return vmas_.size(); }
  const VmaMap& vmas() const { return vmas_; }
  const AddressSpaceLayout& layout() const { return layout_; }
  std::uint64_t page_size() const { return page_size_; }
  const IntervalSet& free_space() const { return free_; }

 private:
  void check_range(const VirtualRange& r) const;

  AddressSpaceLayout layout_;
  std::uint64_t page_size_;
  IntervalSet free_;
  VmaMap vmas_;
};

}  // namespace vmsim
