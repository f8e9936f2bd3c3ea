#include "vmsim/host_kernel.hpp"

#include <algorithm>
#include <iterator>

namespace vmsim {

bool host_mergeable(const HostVma& left, const HostVma& right) {
  return left.file_id == right.file_id && left.prot == right.prot &&
         left.vrange.end == right.vrange.start &&
         left.file_offset + left.vrange.length() == right.file_offset;
}

HostKernel::HostKernel(HostMmConfig config, std::uint64_t page_size)
    : config_(config), page_size_(page_size) {
  if (config_.max_map_count == 0) throw Error(ErrorCode::InvalidArgument, "max_map_count 0");
  if (!is_power_of_two(page_size_)) throw Error(ErrorCode::InvalidArgument, "page size");
}

bool HostKernel::intersects(const VirtualRange& range) const {
  auto it = vmas_.lower_bound(range.end);
  if (it == vmas_.begin()) return false;
  return std::prev(it)->second.vrange.end > range.start;
}

const HostVma* HostKernel::find(Addr addr) const {
  auto it = vmas_.upper_bound(addr);
  if (it == vmas_.begin()) return nullptr;
  --it;
  return it->second.vrange.contains(addr) ? &it->second : nullptr;
}

std::size_t HostKernel::host_mmap(const VirtualRange& vrange, FileId file_id,
                                  std::uint64_t file_offset, Prot prot) {
  if (vrange.empty() || !page_aligned(vrange.start, page_size_) ||
      !page_aligned(vrange.end, page_size_) || !page_aligned(file_offset, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "host mapping " + to_string(vrange));
  }
  if (intersects(vrange)) throw Error(ErrorCode::OverlapError, to_string(vrange));
  // The new record exists before coalescing, so the limit applies pre-merge.
  if (vmas_.size() + 1 > config_.max_map_count) {
    throw MapCountExceeded(vmas_.size(), config_.max_map_count);
  }

  auto it = vmas_.emplace(vrange.start, HostVma{vrange, file_id, file_offset, prot}).first;
  mapped_bytes_ += vrange.length();

  if (it != vmas_.begin()) {
    auto prev = std::prev(it);
    if (host_mergeable(prev->second, it->second)) {
      prev->second.vrange.end = it->second.vrange.end;
      vmas_.erase(it);
      it = prev;
    }
  }
  auto next = std::next(it);
  if (next != vmas_.end() && host_mergeable(it->second, next->second)) {
    it->second.vrange.end = next->second.vrange.end;
    vmas_.erase(next);
  }
  return vmas_.size();
}

MunmapOutcome HostKernel::host_munmap(const VirtualRange& range) {
  MunmapOutcome out;
  if (range.empty() || !page_aligned(range.start, page_size_) ||
      !page_aligned(range.end, page_size_)) {
    throw Error(ErrorCode::InvalidArgument, "munmap " + to_string(range));
  }
  auto it = vmas_.upper_bound(range.start);
  if (it != vmas_.begin()) --it;
  while (it != vmas_.end() && it->second.vrange.start < range.end) {
    const HostVma vma = it->second;
    if (vma.vrange.end <= range.start) {
      ++it;
      continue;
    }
    it = vmas_.erase(it);
    const Addr cut_lo = std::max(vma.vrange.start, range.start);
    const Addr cut_hi = std::min(vma.vrange.end, range.end);
    auto piece = [&vma](Addr s, Addr e) {
      return HostVma{{s, e}, vma.file_id, vma.file_offset + (s - vma.vrange.start), vma.prot};
    };
    out.removed.push_back(piece(cut_lo, cut_hi));
    mapped_bytes_ -= cut_hi - cut_lo;
    if (vma.vrange.start < cut_lo) vmas_.emplace(vma.vrange.start, piece(vma.vrange.start, cut_lo));
    if (vma.vrange.end > cut_hi) {
      vmas_.emplace(cut_hi, piece(cut_hi, vma.vrange.end));
      break;
    }
  }
  out.count = vmas_.size();
  return out;
}

std::vector<PageMapping> HostKernel::expand_pages() const {
  std::vector<PageMapping> pages;
  for (const auto& [start, vma] : vmas_) {
    for (Addr p = vma.vrange.start; p < vma.vrange.end; p += page_size_) {
      pages.push_back({p, vma.file_id, vma.file_offset + (p - vma.vrange.start), vma.prot});
    }
  }
  return pages;
}

std::size_t oracle_vma_count(std::span<const PageMapping> mappings, std::uint64_t page_size) {
  std::vector<PageMapping> pages(mappings.begin(), mappings.end());
  std::sort(pages.begin(), pages.end(),
            [](const PageMapping& a, const PageMapping& b) { return a.page < b.page; });
  std::size_t runs = 0;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (i > 0 && pages[i].page == pages[i - 1].page) {
      throw Error(ErrorCode::DuplicatePage, hex(pages[i].page));
    }
    const bool continues = i > 0 && pages[i - 1].page + page_size == pages[i].page &&
                           pages[i - 1].file_offset + page_size == pages[i].file_offset &&
                           pages[i - 1].file_id == pages[i].file_id &&
                           pages[i - 1].prot == pages[i].prot;
    if (!continues) ++runs;
  }
  return runs;
}

}  // namespace vmsim
