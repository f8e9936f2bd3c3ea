#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "vmsim/common.hpp"

namespace vmsim {

inline constexpr std::size_t kDefaultMaxMapCount = 65530;

struct HostVma {
  VirtualRange vrange;
  FileId file_id;
  std::uint64_t file_offset = 0;
  Prot prot;

  friend bool operator==(const HostVma&, const HostVma&) = default;
};

struct HostMmConfig {
  std::size_t max_map_count = kDefaultMaxMapCount;
};

// One mapped page in the per-page expansion of a host mapping set.
struct PageMapping {
  Addr page = 0;
  FileId file_id;
  std::uint64_t file_offset = 0;
  Prot prot;
};

// Raised by host_mmap when inserting one more VMA would pass the limit.
class MapCountExceeded : public Error {
 public:
  MapCountExceeded(std::size_t count, std::size_t limit)
      : Error(ErrorCode::MapCountExceeded,
              "map count " + std::to_string(count) + " at limit " + std::to_string(limit)),
        count_(count),
        limit_(limit) {}

  std::size_t count() const noexcept { return count_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t count_;
  std::size_t limit_;
};

// Kernel coalescing predicate: address-contiguous, offset-contiguous, same
// file and protection.
bool host_mergeable(const HostVma& left, const HostVma& right);

struct MunmapOutcome {
  std::size_t count = 0;          // host VMA count afterwards
  std::vector<HostVma> removed;   // removed pieces, offsets adjusted per piece
};

// Host Linux view of the sandbox process: the VMA tree with mmap-time
// coalescing and the max_map_count limit.
class HostKernel {
 public:
  explicit HostKernel(HostMmConfig config = {}, std::uint64_t page_size = kDefaultPageSize);

  // Inserts then merges with either neighbour. Returns the post-merge count.
  std::size_t host_mmap(const VirtualRange& vrange, FileId file_id, std::uint64_t file_offset,
                        Prot prot);

  MunmapOutcome host_munmap(const VirtualRange& range);

  std::size_t vma_count() const { return vmas_.size(); }
  const HostVma* find(Addr addr) const;
  bool intersects(const VirtualRange& range) const;
  std::uint64_t mapped_bytes() const { return mapped_bytes_; }

  std::vector<PageMapping> expand_pages() const;
  const std::map<Addr, HostVma>& vmas() const { return vmas_; }
  const HostMmConfig& config() const { return config_; }

 private:
  HostMmConfig config_;
  std::uint64_t page_size_;
  std::uint64_t mapped_bytes_ = 0;
  std::map<Addr, HostVma> vmas_;
};

// Exhaustive run count over a per-page mapping list: number of maximal runs
// of pages that are address-consecutive, offset-consecutive and agree on file
// and protection. Independent of HostKernel's incremental tree.
std::size_t oracle_vma_count(std::span<const PageMapping> mappings,
                             std::uint64_t page_size = kDefaultPageSize);

}  // namespace vmsim
