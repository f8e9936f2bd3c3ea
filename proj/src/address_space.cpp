#include "vmsim/address_space.hpp"

#include <iterator>

namespace vmsim {

bool sentry_mergeable(const SentryVma& left, const SentryVma& right) {
  return left.prot == right.prot && left.file_id == right.file_id &&
         left.alloc_direction == right.alloc_direction;
}

SentryVma merge_adjacent(const SentryVma& left, const SentryVma& right, bool preserve_last_fault) {
  if (left.range.end != right.range.start) {
    throw Error(ErrorCode::NotAdjacent, to_string(left.range) + " and " + to_string(right.range));
  }
  if (!sentry_mergeable(left, right)) {
    throw Error(ErrorCode::IncompatibleAttributes,
                to_string(left.range) + " and " + to_string(right.range));
  }
  SentryVma merged = left;
  merged.range.end = right.range.end;
  merged.last_fault.reset();
  if (preserve_last_fault) {
    const auto& a = left.last_fault;
    const auto& b = right.last_fault;
    if (a && b) {
      merged.last_fault = a->seq >= b->seq ? a : b;
    } else {
      merged.last_fault = a ? a : b;
    }
  }
  return merged;
}

std::optional<Direction> infer_fault_direction(const SentryVma& vma, Addr fault_addr) {
  if (!vma.range.contains(fault_addr)) {
    throw Error(ErrorCode::FaultOutsideVma, hex(fault_addr) + " not in " + to_string(vma.range));
  }
  if (!vma.last_fault) return std::nullopt;
  if (fault_addr < vma.last_fault->addr) return Direction::Down;
  if (fault_addr > vma.last_fault->addr) return Direction::Up;
  return vma.last_fault->inferred;
}

AddressSpace::AddressSpace(AddressSpaceLayout layout, std::uint64_t page_size)
    : layout_(layout), page_size_(page_size) {
  if (!is_power_of_two(page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "page size " + std::to_string(page_size_));
  }
  if (layout_.lo >= layout_.hi || !page_aligned(layout_.lo, page_size_) ||
      !page_aligned(layout_.hi, page_size_)) {
    throw Error(ErrorCode::InvalidArgument,
                "layout " + to_string(VirtualRange{layout_.lo, layout_.hi}));
  }
  free_.insert(layout_.lo, layout_.hi);
}

void AddressSpace::check_range(const VirtualRange& r) const {
  if (r.start >= r.end || !page_aligned(r.start, page_size_) || !page_aligned(r.end, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "range " + to_string(r));
  }
}

VirtualRange AddressSpace::allocate_range(std::uint64_t size, Direction direction) {
  if (size == 0 || !page_aligned(size, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "size " + hex(size));
  }
  auto start = free_.find_fit(size, direction);
  if (!start) throw Error(ErrorCode::OutOfAddressSpace, "no gap of " + hex(size));
  VirtualRange r{*start, *start + size};
  free_.erase(r.start, r.end);
  return r;
}

void AddressSpace::insert_vma(SentryVma vma) {
  check_range(vma.range);
  if (vma.range.start < layout_.lo || vma.range.end > layout_.hi) {
    throw Error(ErrorCode::OutOfBounds, to_string(vma.range));
  }
  auto next = vmas_.lower_bound(vma.range.start);
  if (next != vmas_.end() && next->second.range.overlaps(vma.range)) {
    throw Error(ErrorCode::OverlapError, to_string(vma.range) + " vs " + to_string(next->second.range));
  }
  if (next != vmas_.begin()) {
    const auto& prev = std::prev(next)->second;
    if (prev.range.overlaps(vma.range)) {
      throw Error(ErrorCode::OverlapError, to_string(vma.range) + " vs " + to_string(prev.range));
    }
  }
  if (vma.last_fault && !vma.range.contains(vma.last_fault->addr)) {
    throw Error(ErrorCode::InvalidArgument, "last fault outside " + to_string(vma.range));
  }
  free_.erase(vma.range.start, vma.range.end);
  vmas_.emplace(vma.range.start, std::move(vma));
}

void AddressSpace::unmap_range(const VirtualRange& range) {
  check_range(range);
  auto it = vmas_.upper_bound(range.start);
  if (it != vmas_.begin()) --it;
  while (it != vmas_.end() && it->second.range.start < range.end) {
    if (it->second.range.end <= range.start) {
      ++it;
      continue;
    }
    SentryVma vma = std::move(it->second);
    it = vmas_.erase(it);
    auto fragment = [&](Addr s, Addr e) {
      SentryVma f = vma;
      f.range = {s, e};
      if (f.last_fault && !f.range.contains(f.last_fault->addr)) f.last_fault.reset();
      vmas_.emplace(s, std::move(f));
    };
    if (vma.range.start < range.start) fragment(vma.range.start, range.start);
    if (vma.range.end > range.end) {
      fragment(range.end, vma.range.end);
      break;
    }
  }
  const Addr lo = std::max(range.start, layout_.lo);
  const Addr hi = std::min(range.end, layout_.hi);
  if (lo < hi) free_.insert(lo, hi);
}

SentryVma& AddressSpace::merge_neighbors(Addr addr, bool preserve_last_fault) {
  auto it = vmas_.upper_bound(addr);
  if (it == vmas_.begin() || !std::prev(it)->second.range.contains(addr)) {
    throw Error(ErrorCode::FaultOutsideVma, hex(addr));
  }
  --it;
  if (it != vmas_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.range.end == it->second.range.start &&
        sentry_mergeable(prev->second, it->second)) {
      prev->second = merge_adjacent(prev->second, it->second, preserve_last_fault);
      vmas_.erase(it);
      it = prev;
    }
  }
  auto next = std::next(it);
  if (next != vmas_.end() && it->second.range.end == next->second.range.start &&
      sentry_mergeable(it->second, next->second)) {
    it->second = merge_adjacent(it->second, next->second, preserve_last_fault);
    vmas_.erase(next);
  }
  return it->second;
}

SentryVma* AddressSpace::find(Addr addr) {
  auto it = vmas_.upper_bound(addr);
  if (it == vmas_.begin()) return nullptr;
  --it;
  return it->second.range.contains(addr) ? &it->second : nullptr;
}

const SentryVma* AddressSpace::find(Addr addr) const {
  return const_cast<AddressSpace*>(this)->find(addr);
}

}  // namespace vmsim
