#pragma once

#include <cstdint>
#include <vector>

#include "vmsim/common.hpp"
#include "vmsim/interval_set.hpp"

namespace vmsim {

inline constexpr std::uint64_t kDefaultStoreCapacity = 64ull << 30;

struct FileRange {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  constexpr std::uint64_t end() const { return offset + length; }
  friend constexpr bool operator==(const FileRange&, const FileRange&) = default;
};

struct FragmentationStats {
  std::size_t free_span_count = 0;
  std::uint64_t largest_free_span = 0;
  std::uint64_t allocated_bytes = 0;

  friend constexpr bool operator==(const FragmentationStats&, const FragmentationStats&) = default;
};

// Offset-space model of the one memfd that backs all guest memory. No bytes
// are materialized; only which offsets are in use.
class BackingStore {
 public:
  explicit BackingStore(std::uint64_t capacity = kDefaultStoreCapacity, FileId file_id = FileId{1},
                        std::uint64_t page_size = kDefaultPageSize);

  // Up carves the lowest free span that fits, Down the highest; first-fit
  // from the directional end.
  FileRange alloc_offsets(std::uint64_t length, Direction direction);

  // `range` must be fully allocated (an allocated span or a sub-span of one).
  void free_offsets(const FileRange& range);

  FragmentationStats fragmentation_stats() const;

  // Allocated spans in offset order, adjacent allocations coalesced.
  std::vector<FileRange> allocated_spans() const;

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t allocated_bytes() const { return allocated_; }
  FileId file_id() const { return file_id_; }
  const IntervalSet& free_map() const { return free_; }

  friend bool operator==(const BackingStore&, const BackingStore&) = default;

 private:
  std::uint64_t capacity_;
  FileId file_id_;
  std::uint64_t page_size_;
  std::uint64_t allocated_ = 0;
  IntervalSet free_;
};

}  // namespace vmsim
