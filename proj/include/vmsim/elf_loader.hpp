#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vmsim/common.hpp"

namespace vmsim::elf {

inline constexpr std::uint32_t kPtLoad = 1;
inline constexpr std::uint32_t kPtDynamic = 2;

inline constexpr std::uint32_t kPfX = 1;
inline constexpr std::uint32_t kPfW = 2;
inline constexpr std::uint32_t kPfR = 4;

inline constexpr std::size_t kEhdrSize = 64;
inline constexpr std::size_t kPhdrSize = 56;

enum class SegmentKind : std::uint8_t { Load, Dynamic, Other };

struct ElfSegment {
  std::uint32_t raw_type = 0;
  std::uint32_t flags = 0;
  std::uint64_t file_offset = 0;
  Addr vaddr = 0;
  std::uint64_t file_siz = 0;
  std::uint64_t mem_siz = 0;
  std::uint64_t align = 0;

  SegmentKind kind() const {
    if (raw_type == kPtLoad) return SegmentKind::Load;
    if (raw_type == kPtDynamic) return SegmentKind::Dynamic;
    return SegmentKind::Other;
  }

  friend bool operator==(const ElfSegment&, const ElfSegment&) = default;
};

std::string_view segment_type_name(std::uint32_t raw_type);

// Decodes the ELF64 little-endian program-header table, in table order.
std::vector<ElfSegment> parse_program_headers(std::span<const std::byte> file);

enum class ZeroingMode : std::uint8_t {
  LinuxSemantics,  // zero only [file_siz, mem_siz); page tail keeps file bytes
  LegacyAligned,   // zero everything from file_siz to the page-aligned end
};

std::string_view to_string(ZeroingMode m);

enum class ByteOrigin : std::uint8_t { Unmapped, FromFile, Zeroed };

struct MemoryImage {
  Addr base = 0;
  std::vector<std::byte> bytes;
  std::vector<ByteOrigin> origin;  // parallel to bytes

  Addr end() const { return base + bytes.size(); }
  bool covers(Addr a) const { return a >= base && a < end(); }
};

// Lays out every Load segment into one image spanning the page-aligned union
// of the Loads. Bytes between Loads stay Unmapped.
MemoryImage build_image(std::span<const ElfSegment> segments, std::span<const std::byte> file,
                        ZeroingMode mode, std::uint64_t page_size = kDefaultPageSize);

enum class DynamicPlacement : std::uint8_t { InsideLoad, InAlignedExtension, OutsideEntirely };

std::string_view to_string(DynamicPlacement p);

// Where the single Dynamic segment sits relative to the Loads.
DynamicPlacement classify_dynamic(std::span<const ElfSegment> segments,
                                  std::uint64_t page_size = kDefaultPageSize);

struct IntegrityVerdict {
  bool intact = true;
  // Offset from the start of the Dynamic region to the first byte that
  // differs from the file, when corrupted.
  std::optional<std::uint64_t> first_diff;
};

// Byte-wise comparison of the loaded Dynamic region against its file bytes.
IntegrityVerdict check_dynamic_integrity(std::span<const ElfSegment> segments, const MemoryImage& image,
                                         std::span<const std::byte> file);

}  // namespace vmsim::elf
