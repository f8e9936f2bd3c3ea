#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vmsim {

using Addr = std::uint64_t;

inline constexpr std::uint64_t kDefaultPageSize = 4096;

enum class Direction : std::uint8_t { Up, Down };

constexpr Direction opposite(Direction d) {
  return d == Direction::Up ? Direction::Down : Direction::Up;
}

constexpr std::string_view to_string(Direction d) {
  return d == Direction::Up ? "up" : "down";
}

// Protection bits, same layout as PROT_READ / PROT_WRITE / PROT_EXEC.
struct Prot {
  static constexpr std::uint8_t kRead = 1;
  static constexpr std::uint8_t kWrite = 2;
  static constexpr std::uint8_t kExec = 4;

  std::uint8_t bits = 0;

  static constexpr Prot rw() { return Prot{kRead | kWrite}; }
  constexpr bool readable() const { return bits & kRead; }
  constexpr bool writable() const { return bits & kWrite; }
  constexpr bool executable() const { return bits & kExec; }

  friend constexpr bool operator==(Prot, Prot) = default;
};

// "rwx" subset in canonical r,w,x order; "-" for no access.
std::string to_string(Prot p);

struct FileId {
  std::uint32_t value = 0;
  friend constexpr bool operator==(FileId, FileId) = default;
  friend constexpr auto operator<=>(FileId, FileId) = default;
};

// Half-open [start, end).
struct VirtualRange {
  Addr start = 0;
  Addr end = 0;

  constexpr std::uint64_t length() const { return end - start; }
  constexpr bool empty() const { return end <= start; }
  constexpr bool contains(Addr a) const { return a >= start && a < end; }
  constexpr bool contains(const VirtualRange& r) const {
    return r.start >= start && r.end <= end;
  }
  constexpr bool overlaps(const VirtualRange& r) const {
    return r.start < end && start < r.end;
  }

  friend constexpr bool operator==(const VirtualRange&, const VirtualRange&) = default;
};

std::string to_string(const VirtualRange& r);

constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }
constexpr Addr page_floor(Addr a, std::uint64_t page) { return a & ~(page - 1); }
constexpr Addr page_ceil(Addr a, std::uint64_t page) { return (a + page - 1) & ~(page - 1); }
constexpr bool page_aligned(Addr a, std::uint64_t page) { return (a & (page - 1)) == 0; }

std::string hex(std::uint64_t v);

enum class ErrorCode {
  InvalidArgument,
  // address space
  OutOfAddressSpace,
  OverlapError,
  OutOfBounds,
  NotAdjacent,
  IncompatibleAttributes,
  FaultOutsideVma,
  // backing store
  StoreExhausted,
  NotAllocated,
  // host kernel
  MapCountExceeded,
  DuplicatePage,
  // fault engine
  AlreadyMapped,
  MalformedTrace,
  // elf
  BadMagic,
  UnsupportedClass,
  TruncatedHeader,
  InvalidSegment,
  OverlappingLoads,
  FileRangeOutOfBounds,
  AlignmentMismatch,
  ImageTooLarge,
  NoDynamic,
  MultipleDynamic,
  DynamicUnmapped,
  // workload
  MalformedLine,
  HeaderMismatch,
  NonMonotonicSeq,
  ArenaExhausted,
};

std::string_view to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vmsim
