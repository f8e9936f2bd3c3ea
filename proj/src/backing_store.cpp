#include "vmsim/backing_store.hpp"

namespace vmsim {

BackingStore::BackingStore(std::uint64_t capacity, FileId file_id, std::uint64_t page_size)
    : capacity_(capacity), file_id_(file_id), page_size_(page_size) {
  if (!is_power_of_two(page_size_) || capacity_ == 0 || !page_aligned(capacity_, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "store capacity " + hex(capacity_));
  }
  free_.insert(0, capacity_);
}

FileRange BackingStore::alloc_offsets(std::uint64_t length, Direction direction) {
  if (length == 0 || !page_aligned(length, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "length " + hex(length));
  }
  auto offset = free_.find_fit(length, direction);
  if (!offset) throw Error(ErrorCode::StoreExhausted, "no free span of " + hex(length));
  free_.erase(*offset, *offset + length);
  allocated_ += length;
  return {*offset, length};
}

void BackingStore::free_offsets(const FileRange& range) {
  if (range.length == 0 || !page_aligned(range.offset, page_size_) ||
      !page_aligned(range.length, page_size_) || range.end() > capacity_ ||
      free_.intersects(range.offset, range.end())) {
    throw Error(ErrorCode::NotAllocated, hex(range.offset) + "+" + hex(range.length));
  }
  free_.insert(range.offset, range.end());
  allocated_ -= range.length;
}

FragmentationStats BackingStore::fragmentation_stats() const {
  return {free_.span_count(), free_.largest(), allocated_};
}

std::vector<FileRange> BackingStore::allocated_spans() const {
  std::vector<FileRange> out;
  std::uint64_t cursor = 0;
  for (const auto& [s, e] : free_.spans()) {
    if (s > cursor) out.push_back({cursor, s - cursor});
    cursor = e;
  }
  if (cursor < capacity_) out.push_back({cursor, capacity_ - cursor});
  return out;
}

}  // namespace vmsim
